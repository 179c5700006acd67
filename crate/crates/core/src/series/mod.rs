//! Coefficient rings, truncated q-series, Taylor jets and the graded
//! characteristic-class algebra.

pub mod dd;
pub mod exact;
pub mod graded;
pub mod qseries;
pub mod ring;
pub mod taylor;

pub use graded::{CharacteristicNumbers, GradedElement, Generator, GeneratorTable};
pub use qseries::{QSeries, DEFAULT_TRUNC};
pub use ring::{Analytic, QAlgebra, Ring};
pub use taylor::Taylor;
