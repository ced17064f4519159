fn main() {
    std::process::exit(artcombine::cli::run());
}
