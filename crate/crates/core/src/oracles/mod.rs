//! Reference prices and distributions computed independently of the
//! quantization engine.

mod black_scholes;
mod empirical;
mod finite_difference;
mod monte_carlo;

pub use black_scholes::{black_scholes, OptionKind};
pub use empirical::{empirical_cdf, EmpiricalCdf};
pub use finite_difference::{cn_bermudan, FdConfig};
pub use monte_carlo::{mc_price, mc_prices, Claim, McConfig, McEstimate, PathModel, ZeroBoundary};
