fn main() {
    std::process::exit(prune_ast::cli::run());
}
