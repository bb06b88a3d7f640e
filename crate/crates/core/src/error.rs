use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed STL: {0}")]
    MalformedStl(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold mesh: {} edge(s) shared by more than two triangles, first {:?}", .edges.len(), .edges.first())]
    NonManifold { edges: Vec<(usize, usize)> },

    #[error("non-manifold boundary at vertex {vertex} ({boundary_edges} boundary edges)")]
    NonManifoldBoundary {
        vertex: usize,
        boundary_edges: usize,
    },

    #[error("surface is not orientable (conflict at triangle {triangle})")]
    NonOrientable { triangle: usize },

    #[error("zero-length vertex normal at vertex {0}")]
    ZeroNormal(usize),

    #[error("offset inverted {} triangle(s), first {:?}", .0.len(), .0.first())]
    InvertedTriangles(Vec<usize>),

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("remeshing failed: {0}")]
    Remesh(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("factorization failed at pivot {pivot}")]
    Factorization { pivot: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field error: {0}")]
    Field(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 I/O, 2 mesh validation, 3 singular system.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Config(_) => 1,
            Error::SingularSystem(_)
            | Error::Factorization { .. }
            | Error::NoConvergence { .. } => 3,
            Error::InvalidParameter(_) | Error::Field(_) | Error::NonFinite(_) => 1,
            _ => 2,
        }
    }
}
