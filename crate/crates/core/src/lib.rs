//! Anytime evaluation of discrete Bayesian networks by state-space
//! abstraction.
//!
//! Each variable's ordered elementary states are grouped into contiguous
//! superstates, the coarse network is evaluated exactly, and the most probable
//! superstates are split in half. Repeating this yields answers that improve
//! with time and become exact once every state is elementary.
//!
//! ```
//! use anytime_bn::prelude::*;
//!
//! let net = gen_commuter(4, ParamStyle::Uniform, 1).unwrap();
//! let lh = net.index_of("LH").unwrap();
//! let evidence = Evidence::new().with(lh, 2);
//! let exact = evaluate_exact(&net, &evidence).unwrap();
//! let config = AnytimeConfig { score_against: Some(exact), ..Default::default() };
//! let trace = abstract_iter(&net, &evidence, &config, |_| Control::Continue).unwrap();
//! assert_eq!(trace.records.len(), 4);
//! assert!((trace.last().avg_relscore.unwrap() - 1.0).abs() < 1e-9);
//! ```

pub mod abstraction;
pub mod anytime;
pub mod bench;
pub mod error;
pub mod inference;
pub mod io;
pub mod models;
pub mod network;
pub mod plot;
pub mod scoring;

pub use error::{Error, Result, Violation};

pub mod prelude {
    pub use crate::abstraction::{
        build_apn, cf_weights, map_evidence, select_splits, AbstractNetwork, Partition,
        PolicyKind, SplitStrategy, Superstate, WeightingPolicy,
    };
    pub use crate::anytime::{
        abstract_iter, AnytimeConfig, AnytimeTrace, ClockMode, Control, IterationRecord,
        Termination,
    };
    pub use crate::error::{Error, Result};
    pub use crate::inference::{
        enumerate_joint, evaluate_exact, evaluate_exact_with, marginals_by_enumeration,
        EngineOptions,
    };
    pub use crate::models::{
        gen_chain, gen_commuter, gen_traffic, ParamStyle, TrafficConfig,
    };
    pub use crate::network::{
        validate_network, Cpt, Evidence, MarginalSet, Network, NetworkDraft, Variable,
    };
    pub use crate::scoring::{avg_relscore, log_score, relscore, spread};
}
