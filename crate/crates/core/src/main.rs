fn main() { elastowave::cli::main(); }
