mod common;

use common::{crate_dir, golden_lines, toy_trace};

#[test]
fn toy_agent_matches_golden_cycles() {
    let text = std::fs::read_to_string(crate_dir().join("tests/golden/kernel_toy.txt")).unwrap();
    let expected = golden_lines(&text);
    assert_eq!(expected.len(), 10);
    assert_eq!(toy_trace(10), expected);
}
