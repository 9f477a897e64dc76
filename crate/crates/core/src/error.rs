use crate::mesh::MeshError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("non-finite {field} in element {element}")]
    NonFiniteInput { field: &'static str, element: usize },
    #[error("non-finite or runaway state after stage {stage} of step {step}")]
    Instability { step: usize, stage: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
