use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use varcheck_core::modelgw::{Gateway, ModelConfig, Provider};
use varcheck_core::oracle::{CategoryRules, CompilerSpec, ErrorCategory, Oracle};
use varcheck_core::varmodel::MAX_FEATURE_CAP;

use crate::cli::{CompilerArgs, ModelArgs, Profile};
use crate::error::CliError;

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn check_cap(cap: usize) -> Result<(), CliError> {
    if cap == 0 || cap > MAX_FEATURE_CAP {
        return Err(CliError::Usage(format!("feature cap must be between 1 and {MAX_FEATURE_CAP}, got {cap}")));
    }
    Ok(())
}

impl CompilerArgs {
    /// Builds the oracle after checking that the compiler can be found.
    pub fn oracle(&self) -> Result<Oracle, CliError> {
        check_cap(self.feature_cap)?;
        if !(self.compile_timeout > 0.0 && self.compile_timeout.is_finite()) {
            return Err(CliError::Usage("--compile-timeout must be positive".into()));
        }
        let spec = match &self.cc {
            Some(cc) => CompilerSpec::new(cc),
            None => CompilerSpec::detect()?,
        }
        .with_standard(&self.std)
        .with_timeout(Duration::from_secs_f64(self.compile_timeout))
        .with_flags(self.cflags.iter().cloned());
        spec.resolve()?;
        let mut rules = CategoryRules::default();
        for rule in self.category_rules.iter().rev() {
            let (pattern, category) = rule
                .rsplit_once('=')
                .ok_or_else(|| CliError::Usage(format!("--category-rule {rule:?} is not PATTERN=CATEGORY")))?;
            let category: ErrorCategory = category.parse().map_err(CliError::Usage)?;
            rules.prepend(pattern, category);
        }
        Ok(Oracle::with_options(spec, rules, self.feature_cap, self.jobs.unwrap_or_else(default_jobs).max(1)))
    }
}

impl ModelArgs {
    pub fn config(&self) -> Result<ModelConfig, CliError> {
        let mut config = match self.profile {
            Profile::Local => ModelConfig::local(&self.endpoint, &self.model),
            Profile::Remote => ModelConfig::remote(&self.endpoint, &self.model, "OPENAI_API_KEY"),
        };
        if self.profile == Profile::Remote || self.api_key_env.is_some() {
            config.api_key_env = self.api_key_env.clone().or(config.api_key_env);
        }
        if let Some(p) = &self.provider {
            config.provider = p.parse::<Provider>()?;
        }
        if let Some(t) = self.temperature {
            config.temperature = t;
        }
        if let Some(n) = self.max_retries {
            config.max_retries = n;
        }
        if let Some(b) = self.backoff_base {
            config.backoff_base_secs = b;
        }
        if let Some(t) = self.request_timeout {
            config.request_timeout_secs = t;
        }
        if let Some(i) = self.min_interval {
            config.min_interval_secs = i;
        }
        config.max_tokens = self.max_tokens;
        config.max_in_flight = self.jobs.max(1);
        Ok(config)
    }

    /// Builds the gateway; fails early when the API key variable is unset.
    pub fn gateway(&self) -> Result<Gateway, CliError> {
        let config = self.config()?;
        if let Some(var) = &config.api_key_env {
            if std::env::var_os(var).is_none() {
                return Err(CliError::Environment(format!(
                    "environment variable {var} holding the API key is not set"
                )));
            }
        }
        Ok(Gateway::new(config)?)
    }
}

/// Runs `work` over `items` on up to `jobs` threads and hands each result to
/// `sink` on the calling thread as it arrives. A sink error stops the pool.
pub fn run_pool<T, R>(
    jobs: usize,
    items: &[T],
    work: impl Fn(&T) -> R + Sync,
    mut sink: impl FnMut(&T, R) -> Result<(), CliError>,
) -> Result<(), CliError>
where
    T: Sync,
    R: Send,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, R)>();
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(items.len()) {
            let tx = tx.clone();
            let (next, work) = (&next, &work);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() || tx.send((i, work(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, result) in rx {
            sink(&items[i], result)?;
        }
        Ok(())
    })
}
