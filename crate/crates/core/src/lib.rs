//! Distributed kernel PCA over a simulated master/worker network.
//!
//! Data columns are split across workers of a [`simnet::Cluster`]; every
//! message between master and workers is charged to a word ledger. The main
//! entry point is [`diskpca::dis_kpca`]:
//!
//! ```
//! use diskpca_core::data::{gen_synthetic, SyntheticKind};
//! use diskpca_core::diskpca::{dis_kpca, DisKpcaParams};
//! use diskpca_core::kernels::{subspace_error, KernelSpec};
//! use diskpca_core::simnet::{partition_powerlaw, Cluster};
//!
//! let a = gen_synthetic(SyntheticKind::LowRankPlusNoise, 200, 5, 3, 0.1, 7).unwrap().data;
//! let mut cluster = Cluster::new(&a, &partition_powerlaw(200, 4, 2.0, 7).unwrap(), 7).unwrap();
//! let spec = KernelSpec::Gaussian { bandwidth: 2.0 };
//! let params = DisKpcaParams { p: 60, m: 200, ..Default::default() };
//! let (sol, ledger) = dis_kpca(&mut cluster, &spec, 3, 0.5, &params, 7).unwrap();
//! assert_eq!(sol.k(), 3);
//! assert!(subspace_error(&spec, &a, &sol).unwrap() >= 0.0);
//! assert!(ledger.total_words() > 0);
//! ```

pub mod data;
pub mod diskpca;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod matrix;
pub mod rng;
pub mod simnet;
pub mod sketch;

pub use error::{Error, Result};
