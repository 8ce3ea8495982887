//! Test functions on grids and as radial-profile reductions, with the
//! multipliers, Sobolev norms and operators acting on them.

pub mod grid;
pub mod operators;
pub mod radial;
pub mod test_functions;

pub use grid::{Grid, GridField, SobolevFlavor, C64};
pub use operators::{
    apply_separable_symbol, dual_direction, structure_condition_check, wedge_component_symbol, wedge_operator_apply,
    wedge_pairs, wedge_symbol_sq, Factor, SeparableSymbol, SeparableTerm, StructureReport, WedgeStyle,
};
pub use radial::{
    calibrate_kernel_table, calibrate_trace_kernel, grid_sphere_coefficient, harmonic, harmonic_norm_sq,
    radial_trace_coefficient, radial_trace_norm, KernelEntry, KernelTable, RadialProfile,
};
pub use test_functions::{make_profile, make_test_function, random_band_limited, TestFunction, TestFunctionSpec};
