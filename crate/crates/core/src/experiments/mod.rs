//! Coefficient families, the loss-of-derivatives measurement, verification suites and report
//! files.

pub mod families;
pub mod loss;
pub mod report;
pub mod suite;

pub use families::{build_family, class_consistency, ClassReport, CoefficientFamily, DeclaredClass, RegularityRow, FAMILY_IDS};
pub use loss::{loss_rate_experiment, pooled_slope, theoretical_lambda, LossConfig, LossRateFit, LAMBDA_TIME_SAMPLES};
pub use report::{emit_report, read_csv, EnergyRow, LossRow, ReportInputs};
pub use suite::{calibrate, verify_suite, EnergyRecord, Suite, SuiteArtifacts, SuiteConfig, VerifyReport};
