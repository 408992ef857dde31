fn main() {
    std::process::exit(autolim::config::run());
}
