//! Weakly-supervised video anomaly detection head.
//!
//! Given backbone feature maps for `T` segments of a video, the head pools a
//! global cue, re-weights channels with it, keeps the `k` cells of each
//! segment most similar to that cue, and scores `1+C` channels per segment
//! (channel 0 is "normal"). Training uses only video-level multi-hot labels.
//!
//! Modules roughly follow the data flow:
//! [`numerics`] (tensors, a small reverse-mode tape, gradient checks),
//! [`gig`] and [`spatial`] (forward pass), [`objectives`] and [`head`]
//! (losses), [`training`], [`inference`], and [`io`].

pub mod error;
pub mod gig;
pub mod head;
pub mod inference;
pub mod io;
pub mod numerics;
pub mod objectives;
pub mod rng;
pub mod spatial;
pub mod training;

pub use error::{Error, Result};
