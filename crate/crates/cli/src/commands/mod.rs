pub mod cross;
pub mod data;
pub mod pca;
pub mod report;
pub mod run;
pub mod sweep;
