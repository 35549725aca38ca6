//! Geodesic random walks for `½Δ_{g(t)}`, transport along their paths and
//! the Girsanov-coupled process.

mod coupled;
mod path;
mod transport;
mod walk;

pub use coupled::{
    moment_bound, moment_bound_from, novikov_bound, sample_coupled, simulate_coupled,
    CoupledSample, GirsanovRecord,
};
pub use path::{max_excursions, sample_endpoints, simulate_bm, BrownianPath};
pub use transport::{damped_transport, parallel_transport, DampedTransport, TransportMap};
pub use walk::{Direction, MAX_STEP};
