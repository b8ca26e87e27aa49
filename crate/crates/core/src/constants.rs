//! Physical constants (SI).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact).
pub const KB: f64 = 1.380_649e-23;

/// Mass of a cesium-133 atom, kg.
pub const CESIUM_MASS: f64 = 2.206_946_96e-25;
