use std::path::PathBuf;
use std::process::ExitCode;

use boxmesh::{Axis, BoxSpec};
use clap::Parser;

/// Writes a structured tetrahedral box, optionally wrapped in an absorbing shell.
#[derive(Debug, Parser)]
#[command(name = "boxmesh", version)]
struct Args {
    /// Interior lower corner.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, -1.0, -1.0])]
    min: Vec<f64>,
    /// Interior upper corner.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
    max: Vec<f64>,
    /// Interior cells per axis.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 4, 4])]
    cells: Vec<usize>,
    /// Shell thickness on every side; 0 for no shell.
    #[arg(long, default_value_t = 0.0)]
    pml_width: f64,
    /// Shell cells across the thickness.
    #[arg(long, default_value_t = 0)]
    pml_cells: usize,
    /// Boundary group name of the outer surface: reflective or abc.
    #[arg(long, default_value = "reflective")]
    side: String,
    output: PathBuf,
}

fn main() -> ExitCode {
    let a = Args::parse();
    if [a.min.len(), a.max.len(), a.cells.len()] != [3, 3, 3] {
        eprintln!("boxmesh: --min, --max and --cells take three comma-separated values");
        return ExitCode::from(2);
    }
    if (a.pml_width > 0.0) != (a.pml_cells > 0) || a.cells.contains(&0) {
        eprintln!("boxmesh: need positive cells, and pml width and cells both zero or both positive");
        return ExitCode::from(2);
    }
    let axes = std::array::from_fn(|d| Axis::new(a.min[d], a.max[d], a.cells[d]).with_pml(a.pml_width, a.pml_cells));
    let spec = BoxSpec {
        axes,
        sides: std::array::from_fn(|_| a.side.clone()),
        removed: Vec::new(),
    };
    let mesh = boxmesh::build(&spec);
    if let Err(e) = mesh.write(&a.output) {
        eprintln!("boxmesh: {}: {e}", a.output.display());
        return ExitCode::from(5);
    }
    println!("{}: {} tetrahedra, {} vertices", a.output.display(), mesh.tets.len(), mesh.vertices.len());
    ExitCode::SUCCESS
}
