//! Signal assembly: phased response sums, finite pulses, 2D spectra and
//! disorder averaging.

pub mod disorder;
pub mod fourier;
pub mod impulsive;
pub mod polarization;

pub use disorder::{diagonal_fwhm, disorder_average, DisorderAverage, DisorderModel};
pub use fourier::{fourier_2d, taper, time_energy, FourierOptions, Spectrum2D};
pub use impulsive::{impulsive_signal, SignalKind, TimeSignal};
pub use polarization::{assemble_polarization, Envelope, Polarization, PulseSetup};
