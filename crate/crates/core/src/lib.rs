//! Numerical toolkit for log-concavity of sequences and measures on the
//! half-line: Laplace-transform measurements, Taylor-coefficient
//! inequalities, a counting-process control problem and a discrete
//! Prékopa-Leindler check.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod berwald;
pub mod binom;
pub mod discretepl;
pub mod error;
pub mod gen;
pub mod halfmeasure;
pub mod laplace;
pub mod par;
pub mod poissonctl;
pub mod poly;
pub mod quad;
pub mod seqcore;
pub mod special;

pub use error::{Error, Result};
pub use halfmeasure::{HalfLineMeasure, MeasureCert};
pub use par::Exec;
pub use seqcore::{LogConcaveSeq, Quadruple};
