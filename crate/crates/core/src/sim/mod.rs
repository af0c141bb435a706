//! Synthetic ground truth: deck motion, noisy pose sensors, a
//! velocity-tracking vehicle plant and touchdown geometry.

pub mod plant;
pub mod sensor;
pub mod touchdown;
pub mod wave;

pub use plant::{plant_step, PlantSpec};
pub use sensor::{sample_sensor, SensorSpec};
pub use touchdown::{check_touchdown, deck_height_at, ContactReport};
pub use wave::{WaveComponent, WaveSpec};
