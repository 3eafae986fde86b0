use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config:\n{}", format_issues(.0))]
    Config(Vec<String>),
    #[error("invalid scene:\n{}", format_issues(.0))]
    Scene(Vec<String>),
    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] spmc_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn format_issues(issues: &[String]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, SimError>;
