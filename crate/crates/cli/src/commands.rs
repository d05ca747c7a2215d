use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use gam_sparsify::dataset::{ingest_csv, split_by_indicator, split_random, CsvOptions};
use gam_sparsify::ebm::{fit_ebm_logged, load_model, save_model, TrainConfig, TrainLog};
use gam_sparsify::lasso::{LassoConfig, LassoPath};
use gam_sparsify::metrics::MetricValue;
use gam_sparsify::postprocess::{
    evaluate_model, postprocess_model, write_coef_path, InterceptMode, PipelineOptions,
};
use gam_sparsify::{Dataset, Family, Model};
use log::info;

use crate::{DataArgs, EvaluateCmd, InterceptArg, PostprocessCmd, ReportCmd, TrainArgs, TrainCmd};

fn csv_options(args: &DataArgs, family: Family) -> CsvOptions {
    let mut opts = CsvOptions {
        delimiter: args.delimiter,
        family,
        ..CsvOptions::default()
    };
    if !args.missing.is_empty() {
        opts.missing_tokens = args.missing.clone();
    }
    opts
}

fn load(args: &DataArgs, path: &Path, family: Family) -> Result<Dataset> {
    ingest_csv(path, &args.target, &csv_options(args, family))
        .with_context(|| format!("reading {}", path.display()))
}

/// Train/test rows per the indicator column or the seeded random split.
fn split(args: &DataArgs, data: Dataset) -> Result<(Dataset, Dataset)> {
    match (&args.test_indicator, args.split_fraction) {
        (Some(col), None) => Ok(split_by_indicator(&data, col)?),
        (None, Some(f)) => Ok(split_random(&data, f, args.seed)?),
        (None, None) => bail!("give exactly one of --test-indicator or --split-fraction"),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    }
}

/// Rows to score: the test part when a split is requested, else all rows.
fn scoring_rows(args: &DataArgs) -> Result<Dataset> {
    let data = load(args, &args.data, Family::Gaussian)?;
    if args.test_indicator.is_none() && args.split_fraction.is_none() {
        Ok(data)
    } else {
        Ok(split(args, data)?.1)
    }
}

fn train_config(args: &TrainArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: args.learning_rate,
        max_rounds: args.max_rounds,
        early_stop_patience: args.early_stop_patience,
        validation_fraction: args.validation_fraction,
        outer_bags: args.outer_bags,
        n_interactions: args.interactions,
        max_bins: args.max_bins,
        seed,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_training_log<W: Write>(log: &TrainLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bag", "stage", "round", "val_loss", "best_round"])?;
    for b in &log.bags {
        for (stage, s) in [("mains", &b.mains), ("pairs", &b.pairs)] {
            for (round, loss) in s.val_loss.iter().enumerate() {
                w.write_record([
                    b.bag.to_string(),
                    stage.to_string(),
                    round.to_string(),
                    loss.to_string(),
                    s.best_round.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn fit(data: &DataArgs, args: &TrainArgs, train: &Dataset, dir: &Path) -> Result<Model> {
    let config = train_config(args, data.seed);
    let (model, log) = fit_ebm_logged::<f64>(train, &config, args.family)?;
    out_dir(dir)?;
    save_model(&model, dir.join("model.json"))?;
    write_training_log(&log, create(dir, "training_log.csv")?)?;
    let names: Vec<String> = log
        .pairs
        .iter()
        .map(|&(i, j)| {
            format!(
                "{} & {}",
                model.bin_spec().features[i].name,
                model.bin_spec().features[j].name
            )
        })
        .collect();
    info!("selected pairs: {}", names.join(", "));
    Ok(model)
}

pub fn train(cmd: &TrainCmd) -> Result<()> {
    let data = load(&cmd.data, &cmd.data.data, cmd.train.family)?;
    let (train, _) = split(&cmd.data, data)?;
    let model = fit(&cmd.data, &cmd.train, &train, &cmd.out_dir)?;
    println!(
        "trained {} terms on {} rows; wrote {}",
        model.n_terms(),
        train.n_rows(),
        cmd.out_dir.join("model.json").display()
    );
    Ok(())
}

fn fmt_metric(m: &MetricValue) -> String {
    format!("{} = {}", m.name, m.value)
}

pub fn postprocess(cmd: &PostprocessCmd) -> Result<()> {
    let (model, family) = match &cmd.model {
        Some(p) => {
            let m: Model = load_model(p).with_context(|| format!("loading {}", p.display()))?;
            let family = m.link().family();
            (Some(m), family)
        }
        None => (None, cmd.train.family),
    };
    let data = load(&cmd.data, &cmd.data.data, family)?;
    let (train, test) = split(&cmd.data, data)?;
    let holdout = match &cmd.holdout {
        Some(p) => Some(load(&cmd.data, p, family)?),
        None => None,
    };
    let model = match model {
        Some(m) => m,
        None => fit(&cmd.data, &cmd.train, &train, &cmd.out_dir)?,
    };

    let lasso = LassoConfig {
        family,
        positive: !cmd.lasso.no_positive,
        n_lambda: cmd.lasso.n_lambda,
        lambda_min_ratio: cmd.lasso.lambda_min_ratio,
        standardize: cmd.lasso.standardize,
        tol: cmd.lasso.tol,
        ..LassoConfig::default()
    };
    let options = PipelineOptions {
        intercept: match cmd.lasso.intercept {
            InterceptArg::Reestimate => InterceptMode::Reestimate,
            InterceptArg::Offset => InterceptMode::Offset,
        },
        holdout: holdout.as_ref(),
    };
    let result = postprocess_model(&model, &train, &test, &lasso, &options)?;

    let dir = &cmd.out_dir;
    out_dir(dir)?;
    save_model(&result.reduced_model, dir.join("reduced_model.json"))?;
    result.report.write_csv(create(dir, "path_report.csv")?)?;
    result
        .report
        .write_metric_vs_terms(create(dir, "plotdata_metric_vs_terms.csv")?)?;
    write_coef_path(&result.path, create(dir, "plotdata_coef_path.csv")?)?;

    let (k, row) = result
        .report
        .selected()
        .expect("selected row is always flagged");
    println!(
        "selected lambda = {} (path point {k} of {})",
        row.lambda,
        result.path.len()
    );
    println!(
        "terms: {} -> {} ({:.1}% removed)",
        result.original.n_terms,
        result.reduced.n_terms,
        100.0 * result.reduction_ratio
    );
    println!(
        "test {} -> {}",
        fmt_metric(&result.original.test_metric),
        fmt_metric(&result.reduced.test_metric)
    );
    if let Some((orig, red)) = &result.holdout {
        println!("holdout {} -> {}", fmt_metric(orig), fmt_metric(red));
    }
    print_kept_terms(&result.path, k);
    Ok(())
}

fn print_kept_terms(path: &LassoPath<f64>, k: usize) {
    let kept: Vec<String> = path
        .names
        .iter()
        .zip(&path.coefs[k])
        .filter(|(_, &c)| c != 0.0)
        .map(|(n, c)| format!("{n} ({c:.4})"))
        .collect();
    info!("kept terms: {}", kept.join(", "));
}

pub fn evaluate(cmd: &EvaluateCmd) -> Result<()> {
    let models: Vec<(String, Model)> = cmd
        .model
        .iter()
        .map(|p| {
            let m = load_model(p).with_context(|| format!("loading {}", p.display()))?;
            Ok((p.display().to_string(), m))
        })
        .collect::<Result<_>>()?;
    // Gaussian accepts any numeric target; a link mismatch is reported per model.
    let data = scoring_rows(&cmd.data)?;
    let mut rows = Vec::new();
    for (name, m) in &models {
        let values =
            evaluate_model(m, &data, cmd.top_k).with_context(|| format!("evaluating {name}"))?;
        let text: Vec<String> = values.iter().map(fmt_metric).collect();
        println!(
            "{name} ({} terms, n = {}): {}",
            m.n_terms(),
            data.n_rows(),
            text.join(", ")
        );
        rows.extend(values.into_iter().map(|v| (name.clone(), v)));
    }
    println!();
    let stdout = io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(["model", "metric", "value", "n"])?;
    for (name, v) in rows {
        w.write_record([name, v.name, v.value.to_string(), v.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn report(cmd: &ReportCmd) -> Result<()> {
    let model: Model =
        load_model(&cmd.model).with_context(|| format!("loading {}", cmd.model.display()))?;
    let data = scoring_rows(&cmd.data)?;
    let imp = model.term_importances(&data)?;
    let mut order: Vec<usize> = (0..imp.len()).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]));
    println!("intercept = {}", model.intercept());
    for &j in &order {
        println!("{:>12.6}  {}", imp[j], model.term_name(j));
    }
    if let Some(dir) = &cmd.out_dir {
        out_dir(dir)?;
        let mut w = csv::Writer::from_writer(create(dir, "importances.csv")?);
        w.write_record(["term", "importance"])?;
        for &j in &order {
            w.write_record([model.term_name(j), imp[j].to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}
