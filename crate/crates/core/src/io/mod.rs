//! File formats: config, HKL and background tables, raw images with JSON
//! sidecars, PGM previews, and CSV reports.

mod config;
mod csv_report;
mod image;
mod text;

pub use config::{
    load_config, BackgroundSection, BeamSection, CampaignSection, ConfigFile, CrystalSection, DetectorSection,
    SimulationConfig, SimulationSection, DEFAULT_F,
};
pub use csv_report::{
    write_kernel_csv, write_scaling_csv, write_tenancy_csv, CsvTable, KERNEL_COLUMNS, SCALING_COLUMNS,
    TENANCY_COLUMNS,
};
pub use image::{
    downcast, encode_payload, image_paths, preview_levels, read_image, write_image, write_preview, ImageMeta,
    Sidecar, FORMAT,
};
pub use text::{load_background, load_hkl, write_background, write_hkl};
