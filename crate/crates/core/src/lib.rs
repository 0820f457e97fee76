//! Sequential weighing search for three forged coins among `2^m`, its
//! mean-duration analysis, and the zero-error three-user adder-channel
//! feedback code derived from it.
//!
//! ```
//! use coinweigh::{search, ProblemInstance, ScaleOracle};
//!
//! let mut oracle = ScaleOracle::new(ProblemInstance::new(3, [0, 4, 7]).unwrap());
//! let trace = search(&mut oracle, 3).unwrap();
//! assert_eq!(trace.recovered, [0, 4, 7]);
//! assert_eq!(trace.total, 5);
//! ```

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod model;
pub mod search;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    materialize, Block, CoinLabel, CrossCheckScale, Group, GroupClause, Half, ProblemInstance,
    Scale, ScaleOracle, SubsetDescriptor, WeighOutcome,
};
pub use search::{search, stage0, stage1, stage2, SearchTrace, Stage0Result};
pub use table::{decode_row, DecodeTable, DECODE_TABLE};
