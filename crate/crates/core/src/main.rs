fn main() {
    std::process::exit(oscar_jumps::cli::main());
}
