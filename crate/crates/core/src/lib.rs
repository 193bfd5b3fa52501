//! Vision-guided strip following with dot-pattern fiducials.
//!
//! A mobile robot follows a bright strip on a dark floor using a downward
//! camera, and reads dot-pattern boards with a forward camera to decide
//! where to turn and when it has arrived. The crate is organized by stage:
//!
//! - [`imaging`]: PNM I/O, fixed/adaptive binarization and blob extraction.
//! - [`path_tracker`]: strip segmentation, offset/gradient estimation and the
//!   steering law that combines them.
//! - [`fiducial`]: dark-dot detection and classification into
//!   left-turn / right-turn / terminal markers.
//! - [`survey`]: multi-view triangulation of marker discs (linear
//!   initialization followed by damped Gauss-Newton on reprojection error).
//! - [`controller`]: the follow / turn / reacquire / stop state machine.
//! - [`sim`]: a deterministic 2D world with two synthetic cameras that closes
//!   the perception-control loop.

pub mod controller;
pub mod fiducial;
pub mod imaging;
pub mod path_tracker;
pub mod sim;
pub mod survey;

pub use controller::{Controller, ControllerConfig, Mode, StopReason, TurnDirection};
pub use fiducial::{FiducialConfig, FiducialDetection, FiducialPattern};
pub use imaging::{BinaryImage, Blob, Image, Polarity};
pub use path_tracker::{PathEstimate, SteeringCommand, SteeringGains};
pub use sim::{EpisodeReport, Outcome, Pose2D, World};
pub use survey::{CameraMatrix, Observation, Point3D};
