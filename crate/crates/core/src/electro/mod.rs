//! Compartmental electrophysiology of a single soleus fiber.

pub mod cable;
pub mod channels;
pub mod trace;

pub use cable::{simulate_fiber, FiberModel, IntegrationError};
pub use channels::{
    axial_current, axial_resistance, gating_steady_state, gating_time_constant, ionic_current_density, step_gating, Channel,
    CurrentDensities, GatingParams, MembraneState, StimulusSpec,
};
pub use trace::{ap_morphology, conduction_velocity, APTrace, ApAnalysisError, ApMorphology, ApSummary, TraceMeta};
