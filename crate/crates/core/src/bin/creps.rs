#[global_allocator]
static ALLOC: creps::bench::TrackingAllocator = creps::bench::TrackingAllocator;

fn main() {
    std::process::exit(creps::cli::run(std::env::args_os()));
}
