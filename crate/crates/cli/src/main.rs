fn main() {
    std::process::exit(dynamo_cli::run(std::env::args_os()));
}
