// Every chapter of the guide is pulled in as module docs, so the snippets in
// book/src run under `cargo test --doc -p memkin-book` and cannot drift from
// the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/devices.md")]
pub mod devices {}

#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}

#[doc = include_str!("../../../book/src/master-equation.md")]
pub mod master_equation {}

#[doc = include_str!("../../../book/src/monte-carlo.md")]
pub mod monte_carlo {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/iv-loops.md")]
pub mod iv_loops {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
