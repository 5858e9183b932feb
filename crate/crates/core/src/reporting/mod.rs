//! Campaign driver and artifact output: CSV/JSON tables and SVG figures.

mod campaign;
mod svg;
mod tables;

pub use campaign::{run_campaign, CampaignConfig, CampaignRun, ModelChoice, ModelRun};
pub use svg::{emit_svg, Axes, Series};
pub use tables::{injections_from_power_flow_csv, model_json, power_flow_csv, read_injections};
