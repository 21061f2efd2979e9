//! Benchmark generation, fault injection, standardization and CSV I/O.

mod csvio;
mod fault;
mod generator;
mod scaler;
mod table;

pub use csvio::{load_csv, parse_csv, write_csv, CsvSchema};
pub use fault::{inject_fault, FaultSpec, FaultTarget};
pub use generator::{
    generate_benchmark, generate_numerical, process_names, quality_function, BenchmarkSeries,
    GeneratorSpec, NumericalPlant,
};
pub use scaler::Scaler;
pub use table::{DataMatrix, Role};
