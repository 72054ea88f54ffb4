//! Run selected acceptance criteria (default: the fast ones) and print a
//! one-line verdict for each.

use rydtrap::verify::{self, Mode};

fn main() {
    let mut ids: Vec<u32> = std::env::args().skip(1).filter_map(|a| verify::parse_criterion(&a)).collect();
    if ids.is_empty() {
        ids = vec![1, 2, 7, 8, 10, 11, 17];
    }
    for r in verify::run_selected(&ids, Mode::from_env(), 0) {
        println!("{}", r.line());
    }
}
