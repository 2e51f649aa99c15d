//! `growthlab`: runs theorem checks and audits and writes JSON or CSV reports.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use growthlab_core::buffering::{chain_separation, check_buffering, BufferingParams, ChainSpec, ChainVerdict};
use growthlab_core::closure::{elementary_closure, separation_selector, SubgroupRef, DEFAULT_EXPONENT_CAP};
use growthlab_core::geometry::audit::default_delta_grid;
use growthlab_core::geometry::{axis, constriction_audit, elementary_properties_audit, AuditOptions, ProjectionMap};
use growthlab_core::lab::{
    amalgam_injectivity, amalgam_pipeline, assess_growth_gap, assess_quotient_growth, coarse_quotient_check, to_json,
    AmalgamOptions, ExperimentConfig, ReportFormat, TheoremReport, Verdict,
};
use growthlab_core::subgroup::growth::{growth_records, records_to_csv};
use growthlab_core::subgroup::{relative_growth, schreier_growth, CoreGraph};
use growthlab_core::{Error, MarkedGroup};

#[derive(Parser)]
#[command(name = "growthlab", version, about = "Growth of subgroups and coset spaces in free groups and free products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct TheoremArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    group: Option<String>,
    /// Subgroup file, one generator per line.
    #[arg(long)]
    subgroup: Option<PathBuf>,
    /// Inline subgroup generator (repeatable).
    #[arg(long = "gen")]
    generators: Vec<String>,
    #[arg(long)]
    g0: Option<String>,
    #[arg(long)]
    rmax: Option<u32>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    output: Output,
}

impl TheoremArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(g) = &self.group {
            cfg.group = g.clone();
        }
        if self.subgroup.is_some() {
            cfg.subgroup = self.subgroup.clone();
        }
        if !self.generators.is_empty() {
            cfg.generators = self.generators.clone();
        }
        if self.g0.is_some() {
            cfg.g0 = self.g0.clone();
        }
        if self.rmax.is_some() {
            cfg.rmax = self.rmax;
        }
        if let Some(m) = self.margin {
            cfg.margin = m;
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        if self.output.out.is_some() {
            cfg.out = self.output.out.clone();
        }
        if let Some(f) = self.output.format {
            cfg.format = match f {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check omega_H < omega_G.
    Gap(TheoremArgs),
    /// Check omega_{G/H} = omega_G.
    Quotient(TheoremArgs),
    /// Search for relations in H *_{H∩E} <g^M, H∩E>.
    Amalgam {
        #[arg(long, default_value = "free:2")]
        group: String,
        #[arg(long)]
        subgroup: Option<PathBuf>,
        #[arg(long = "gen")]
        generators: Vec<String>,
        /// Treat the generators as the full element list of a finite subgroup.
        #[arg(long)]
        finite: bool,
        /// Element whose transversal conjugate is used.
        #[arg(long, default_value = "ab")]
        g0: String,
        /// Use this g and `--power` directly instead of searching.
        #[arg(long)]
        g: Option<String>,
        #[arg(long, default_value_t = 1)]
        power: u32,
        #[arg(long, default_value_t = 4)]
        syllables: usize,
        #[arg(long, default_value_t = 4)]
        letter_len: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Constriction and elementary-property audit of an axis.
    Audit {
        #[arg(long, default_value = "free:2")]
        group: String,
        #[arg(long)]
        axis: String,
        /// Second axis for the two-set properties.
        #[arg(long)]
        other: Option<String>,
        #[arg(long, default_value_t = 4)]
        rmax: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Check a buffering chain given as JSON.
    Buffering {
        /// `{group, subgroup, g, word, radius}` chain description.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        delta: u32,
        #[arg(long, default_value_t = 0)]
        epsilon: u32,
        #[arg(long = "L", default_value_t = 0)]
        l: u32,
        #[arg(long, default_value_t = 0)]
        theta: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Elementary closure E(g).
    Closure {
        #[arg(long, default_value = "free:2")]
        group: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 6)]
        radius: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Separation selector f(u, y), optionally followed by the coarse quotient check.
    Selector {
        #[arg(long, default_value = "free:2")]
        group: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 0)]
        epsilon: u32,
        #[arg(long, default_value_t = 0)]
        theta: u32,
        #[arg(long, default_value_t = 0)]
        theta0: u32,
        #[arg(long, default_value = "1")]
        y: String,
        #[arg(long, default_value_t = 4)]
        rmax: u32,
        /// Subgroup file; runs the coarse quotient check against it.
        #[arg(long)]
        subgroup: Option<PathBuf>,
        #[arg(long = "gen")]
        generators: Vec<String>,
        #[arg(long, default_value_t = 8)]
        bound: u32,
        #[command(flatten)]
        output: Output,
    },
}

/// Outcome of a command: report text plus the exit code it implies.
struct Outcome {
    text: String,
    code: u8,
}

fn render<T: Serialize>(value: &T, format: Option<Format>, csv: impl FnOnce() -> anyhow::Result<String>) -> anyhow::Result<String> {
    match format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json(value)?),
        Format::Csv => csv(),
    }
}

fn no_csv() -> anyhow::Result<String> {
    Err(anyhow!("this command only writes JSON"))
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Inapplicable => 2,
        Verdict::Fail => 3,
    }
}

fn word_list(group: &MarkedGroup, gens: &[String]) -> anyhow::Result<Vec<growthlab_core::Word>> {
    gens.iter().map(|s| Ok(group.reduce(s)?)).collect()
}

fn core_from(group: &MarkedGroup, file: &Option<PathBuf>, gens: &[String]) -> anyhow::Result<CoreGraph> {
    match file {
        Some(p) => Ok(CoreGraph::from_spec_file(group, p)?),
        None if !gens.is_empty() => {
            let g: Vec<&str> = gens.iter().map(String::as_str).collect();
            Ok(CoreGraph::from_generators(group, &g)?)
        }
        None => Err(Error::InvalidConfig("no subgroup given".into()).into()),
    }
}

fn theorem(report: TheoremReport, cfg: &ExperimentConfig, csv: impl FnOnce() -> anyhow::Result<String>) -> anyhow::Result<Outcome> {
    let format = match cfg.format {
        ReportFormat::Json => Format::Json,
        ReportFormat::Csv => Format::Csv,
    };
    Ok(Outcome {
        text: render(&report, Some(format), csv)?,
        code: verdict_code(report.verdict),
    })
}

fn run(command: Command) -> anyhow::Result<(Outcome, Option<PathBuf>)> {
    match command {
        Command::Gap(args) => {
            let cfg = args.config()?;
            let report = assess_growth_gap(&cfg)?;
            let group = cfg.marked_group()?;
            let out = theorem(report, &cfg, || {
                let rg = relative_growth(&cfg.core(&group)?, cfg.ball_radius() as usize)?;
                Ok(records_to_csv(&growth_records(&rg.counts))?)
            })?;
            Ok((out, cfg.out))
        }
        Command::Quotient(args) => {
            let cfg = args.config()?;
            let report = assess_quotient_growth(&cfg)?;
            let group = cfg.marked_group()?;
            let out = theorem(report, &cfg, || {
                let sg = schreier_growth(&cfg.core(&group)?, cfg.schreier_radius())?;
                Ok(records_to_csv(&growth_records(&sg.right_counts))?)
            })?;
            Ok((out, cfg.out))
        }
        Command::Amalgam {
            group,
            subgroup,
            generators,
            finite,
            g0,
            g,
            power,
            syllables,
            letter_len,
            output,
        } => {
            let group = MarkedGroup::parse(&group)?;
            let h = if finite {
                SubgroupRef::Elements(group.clone(), word_list(&group, &generators)?)
            } else {
                SubgroupRef::Core(core_from(&group, &subgroup, &generators)?)
            };
            let opts = AmalgamOptions {
                syllables,
                letter_len,
                ..Default::default()
            };
            let report = match g {
                Some(g) => amalgam_injectivity(&h, &group.reduce(&g)?, power, &opts)?,
                None => {
                    let d = ExperimentConfig::default();
                    amalgam_pipeline(
                        &h,
                        &group.reduce(&g0)?,
                        d.transversal_radius,
                        d.transversal_theta,
                        d.separation_theta,
                        &opts,
                    )?
                }
            };
            let text = render(&report, output.format, no_csv)?;
            Ok((Outcome { text, code: 0 }, output.out))
        }
        Command::Audit {
            group,
            axis: a,
            other,
            rmax,
            output,
        } => {
            let group = MarkedGroup::parse(&group)?;
            let pm = ProjectionMap::to_axis(axis(&group, &group.reduce(&a)?)?);
            let pm_b = match other {
                Some(b) => Some(ProjectionMap::to_axis(axis(&group, &group.reduce(&b)?)?)),
                None => None,
            };
            let table = elementary_properties_audit(&pm, pm_b.as_ref(), rmax, &AuditOptions::default())?;
            let constriction = constriction_audit(&pm, rmax, &default_delta_grid())?;
            let code = if constriction.violations.is_empty() { 0 } else { 3 };
            #[derive(Serialize)]
            struct AuditReport<'a> {
                table: &'a growthlab_core::geometry::AuditTable,
                constriction: &'a growthlab_core::geometry::ConstrictionReport,
            }
            let report = AuditReport {
                table: &table,
                constriction: &constriction,
            };
            let text = render(&report, output.format, || {
                let mut s = String::from("property,theta\n");
                let rows = [
                    ("1", Some(table.theta_1)),
                    ("2", table.theta_2),
                    ("3", Some(table.theta_3)),
                    ("4", Some(table.theta_4)),
                    ("5", table.theta_5),
                    ("cs1", Some(constriction.delta_cs1)),
                    ("cs2", Some(constriction.delta_cs2)),
                ];
                for (name, v) in rows {
                    s += &format!("{name},{}\n", v.map(|x| x.to_string()).unwrap_or_default());
                }
                Ok(s)
            })?;
            Ok((Outcome { text, code }, output.out))
        }
        Command::Buffering {
            spec,
            delta,
            epsilon,
            l,
            theta,
            output,
        } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let chain: ChainSpec = serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let seq = chain.build()?;
            let params = BufferingParams::new(delta, epsilon, l);
            let buffering = check_buffering(&seq, params);
            let separation = if buffering.pass {
                Some(chain_separation(&seq, params, theta)?)
            } else {
                None
            };
            let code = match &separation {
                None | Some(ChainVerdict::Inapplicable { .. }) => 2,
                Some(ChainVerdict::Fail { .. }) => 3,
                Some(ChainVerdict::Pass { .. }) => 0,
            };
            #[derive(Serialize)]
            struct BufferingOutput {
                buffering: growthlab_core::buffering::BufferingReport,
                separation: Option<ChainVerdict>,
            }
            let report = BufferingOutput { buffering, separation };
            let text = render(&report, output.format, || {
                let mut s = String::from("index,bs1,bs2,bs3,bs4\n");
                let f = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
                for v in &report.buffering.values {
                    s += &format!("{},{},{},{},{}\n", v.index, f(v.bs1), f(v.bs2), f(v.bs3), f(v.bs4));
                }
                Ok(s)
            })?;
            Ok((Outcome { text, code }, output.out))
        }
        Command::Closure {
            group,
            g,
            radius,
            output,
        } => {
            let group = MarkedGroup::parse(&group)?;
            let desc = elementary_closure(&group, &group.reduce(&g)?, radius, DEFAULT_EXPONENT_CAP)?;
            let text = render(&desc, output.format, || {
                let mut s = String::from("u,sign\n");
                for c in &desc.certificates {
                    s += &format!("{},{}\n", c.u, c.sign);
                }
                Ok(s)
            })?;
            Ok((Outcome { text, code: 0 }, output.out))
        }
        Command::Selector {
            group,
            g,
            epsilon,
            theta,
            theta0,
            y,
            rmax,
            subgroup,
            generators,
            bound,
            output,
        } => {
            let group = MarkedGroup::parse(&group)?;
            let y = if y == "1" { group.identity() } else { group.reduce(&y)? };
            let sel = separation_selector(&group, &group.reduce(&g)?, epsilon, theta, theta0, &y, rmax, 1 << 12)?;
            let cq = if subgroup.is_some() || !generators.is_empty() {
                let core = core_from(&group, &subgroup, &generators)?;
                let radii: Vec<u32> = (3..=rmax.max(3)).collect();
                Some(coarse_quotient_check(&core, &sel, rmax, bound, &radii)?)
            } else {
                None
            };
            let code = if sel.all_rows_pass() { 0 } else { 3 };
            #[derive(Serialize)]
            struct SelectorOutput<'a> {
                selector: &'a growthlab_core::closure::SeparationSelector,
                coarse_quotient: Option<growthlab_core::lab::CoarseQuotientReport>,
            }
            let report = SelectorOutput {
                selector: &sel,
                coarse_quotient: cq,
            };
            let text = render(&report, output.format, || {
                let mut s = String::from("u,choice,value\n");
                for r in &sel.rows {
                    s += &format!("{},{},{}\n", r.u, r.choice, r.value);
                }
                Ok(s)
            })?;
            Ok((Outcome { text, code }, output.out))
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::HypothesisFailed(_)) | Some(Error::PreconditionFailed(_)) => 2,
        Some(Error::CounterexampleFound(_)) | Some(Error::CqViolation(_)) => 3,
        Some(Error::BudgetExceeded(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok((outcome, out)) => {
            let written = match out {
                Some(p) => std::fs::write(&p, &outcome.text).with_context(|| format!("writing {}", p.display())),
                None => std::io::stdout().write_all(outcome.text.as_bytes()).map_err(Into::into),
            };
            match written {
                Ok(()) => ExitCode::from(outcome.code),
                Err(e) => {
                    eprintln!("growthlab: {e:#}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("growthlab: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
