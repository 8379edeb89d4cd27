pub mod exec;
pub mod font;
pub mod frame;
pub mod inpaint;
pub mod metrics;
pub mod pipeline;
pub mod png_io;
pub mod redact;
pub mod ctc;
pub mod dicom;
pub mod scrub;
pub mod synth;
