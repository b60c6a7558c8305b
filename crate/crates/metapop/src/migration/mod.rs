//! Migration generators, transition functions and convolution kernels.

mod generator;
mod grid;
mod kernels;

pub use generator::{
    transition_matrices_on_grid, transition_matrix, GeneratorMatrix, UNIFORMIZATION_TAIL,
};
pub use grid::Grid;
pub use kernels::{
    build_kernel_table, CrossKernel, KernelMethod, KernelOptions, KernelSeries, MonteCarlo,
    TransitionKernelTable,
};
pub(crate) use kernels::{discretize, flatten, Discretized};
