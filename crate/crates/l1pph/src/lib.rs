//! Property-preserving hashing for the asymmetric l1-distance predicate on
//! pixel vectors.
//!
//! An image over Z_q^n is hashed to the truncated polynomial
//! sigma_x(z) = prod_i (1 - a_i z)^{x_i} mod z^{t+1} over a prime field Z_p
//! with p > n. Whether two images are within one-sided l1 thresholds
//! (t_plus, t_minus - delta) can then be decided purely from two digests:
//! multiply the stored inverse digest of the reference by the query digest
//! and run the extended Euclidean algorithm on (z^{t+1}, product) until the
//! remainder degree drops below t_plus; the cofactor degree at that point
//! recovers the one-sided distances whenever the pair is within threshold,
//! and exceeds the test bound with probability about p^-delta otherwise.
//!
//! Modules:
//! - [`field`]: exact Z_p arithmetic and deterministic prime selection
//! - [`poly`]: truncated polynomial arithmetic and the EEA engine
//! - [`metrics`]: dotdiv, norms, NAD, and the predicate oracle on raw vectors
//! - [`pph`]: key sampling, hashing, digest inversion, hash-domain evaluation
//! - [`bounds`]: ball-cardinality and compression bounds, digest sizes
//! - [`imaging`]: PGM/PPM ingestion, block plans, brightness/contrast
//! - [`store`]: database setup/prepare/detect with a bit-exact file format
//! - [`sim`]: seeded experiment harness (error rates, recursion checks, timing)
//! - [`cli`]: the command-line front end

pub mod bounds;
pub mod cli;
pub mod error;
pub mod field;
pub mod imaging;
pub mod metrics;
pub mod pph;
pub mod poly;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
