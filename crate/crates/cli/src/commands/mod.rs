pub mod evaluate;
pub mod extract;
pub mod fit;
pub mod report;
pub mod synth;
