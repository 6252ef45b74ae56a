fn main() {
    std::process::exit(fastfood_cli::main_from_env());
}
