use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use trafsvm_core::arff::{self, parse_arff, parse_range, remove_attributes, write_arff, ArffError, ConvertOptions, Dataset};
use trafsvm_core::eval::{self, confusion, summarize, EvalReport, RunInfo, Timings};
use trafsvm_core::ingest::{self, merge_batches, parse_capture_csv, write_capture_csv, CaptureBatch, HeaderMode, IngestError, ParseOptions};
use trafsvm_core::prep::{encode, fit_encoder, percentage_split, split_indices, FitOptions, PrepError, RareBucket, SplitSpec};
use trafsvm_core::report::{self, AccuracyEntry, ReportOptions, TrafficReport};
use trafsvm_core::svm::io::{load_model, save_model};
use trafsvm_core::svm::{train_ovo, KernelKind, KernelSpec, Selection, SvmError, SvmOvoModel, TrainConfig};

use crate::config::PipelineConfig;
use crate::{Cli, Command, ConvertArgs, CsvArgs, EvaluateArgs, MergeArgs, PredictArgs, ReportArgs, TrainArgs};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_TRAIN: u8 = 4;
pub const EXIT_SCHEMA: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T = ()> = Result<T, Failure>;

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    fail(EXIT_IO, anyhow!(e).context(path.display().to_string()))
}

fn ingest_fail(path: &Path, e: IngestError) -> Failure {
    match e {
        IngestError::Io(e) => io_fail(path, e),
        IngestError::Malformed(rows) => {
            for r in &rows {
                eprintln!("{}:{}: {}", path.display(), r.line, r.reason);
            }
            fail(EXIT_PARSE, anyhow!("{}: {} malformed row(s)", path.display(), rows.len()))
        }
        e => fail(EXIT_PARSE, anyhow!(e).context(path.display().to_string())),
    }
}

fn arff_fail(path: &Path, e: ArffError) -> Failure {
    match e {
        ArffError::Io(e) => io_fail(path, e),
        e => fail(EXIT_PARSE, anyhow!(e).context(path.display().to_string())),
    }
}

fn prep_fail(e: PrepError, default: u8) -> Failure {
    let code = match e {
        PrepError::SchemaMismatch(_) | PrepError::UnseenNominal { .. } => EXIT_SCHEMA,
        _ => default,
    };
    fail(code, e)
}

fn svm_fail(path: &Path, e: SvmError) -> Failure {
    match e {
        SvmError::Io(e) => io_fail(path, e),
        SvmError::VersionMismatch { .. } | SvmError::CorruptModel { .. } => {
            fail(EXIT_PARSE, anyhow!(e).context(path.display().to_string()))
        }
        SvmError::Encoding(e) => prep_fail(e, EXIT_SCHEMA),
        SvmError::DimensionMismatch { .. } => fail(EXIT_SCHEMA, e),
        e => fail(EXIT_TRAIN, e),
    }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    fail(EXIT_PARSE, anyhow!("{message}"))
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_fail(path, e))
}

/// Write through `f` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Outcome {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_fail(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_fail(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).and_then(|_| lock.flush()).map_err(|e| io_fail(Path::new("<stdout>"), e))
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn json_line(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serialises");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| {
            let code = if path.exists() { EXIT_PARSE } else { EXIT_IO };
            fail(code, e)
        })?,
        None => PipelineConfig::default(),
    };
    let ctx = Session {
        seed: cli.seed.or(config.seed),
        json: cli.json,
        quiet: cli.quiet,
        config,
    };
    match cli.command {
        Command::Convert(a) => ctx.convert(a),
        Command::Merge(a) => ctx.merge(a),
        Command::Train(a) => ctx.train(a),
        Command::Evaluate(a) => ctx.evaluate(a),
        Command::Predict(a) => ctx.predict(a),
        Command::Report(a) => ctx.report(a),
    }
}

struct Session {
    seed: Option<u64>,
    json: bool,
    quiet: bool,
    config: PipelineConfig,
}

fn header_mode(name: &str) -> Outcome<HeaderMode> {
    match name {
        "auto" => Ok(HeaderMode::Auto),
        "present" => Ok(HeaderMode::Present),
        "absent" => Ok(HeaderMode::Absent),
        other => Err(usage(format!("unknown header mode {other:?}"))),
    }
}

fn remove_set(spec: Option<&str>) -> Outcome<BTreeSet<usize>> {
    match spec {
        None => Ok(BTreeSet::new()),
        Some(s) => parse_range(s).map_err(|e| usage(format!("bad --remove list {s:?}: {e}"))),
    }
}

impl Session {
    fn parse_options(&self, csv: &CsvArgs) -> Outcome<ParseOptions> {
        let c = &self.config.convert;
        let delimiter = csv.delimiter.or(c.delimiter).unwrap_or(',');
        if !delimiter.is_ascii() {
            return Err(usage("delimiter must be a single ASCII character"));
        }
        Ok(ParseOptions {
            delimiter: delimiter as u8,
            header: header_mode(csv.header.as_deref().or(c.header.as_deref()).unwrap_or("auto"))?,
            skip_malformed: csv.skip_malformed || c.skip_malformed.unwrap_or(false),
        })
    }

    fn read_batch(&self, path: &Path, label: &str, options: &ParseOptions) -> Outcome<CaptureBatch> {
        let parsed = parse_capture_csv(open(path)?, &path.display().to_string(), label, options)
            .map_err(|e| ingest_fail(path, e))?;
        for r in &parsed.skipped {
            log::warn!("{}:{}: skipped: {}", path.display(), r.line, r.reason);
        }
        Ok(parsed.batch)
    }

    fn read_batches(&self, inputs: &[PathBuf], label: &str, csv: &CsvArgs) -> Outcome<CaptureBatch> {
        let options = self.parse_options(csv)?;
        let batches = inputs
            .iter()
            .map(|p| self.read_batch(p, &stem(p), &options))
            .collect::<Outcome<Vec<_>>>()?;
        merge_batches(batches, label).map_err(|e| fail(EXIT_PARSE, e))
    }

    fn convert(&self, a: ConvertArgs) -> Outcome {
        let c = &self.config.convert;
        let label = a.label.or_else(|| c.label.clone()).unwrap_or_else(|| stem(&a.inputs[0]));
        let batch = self.read_batches(&a.inputs, &label, &a.csv)?;
        let options = ConvertOptions {
            info_as_nominal: a.info_nominal || c.info_nominal.unwrap_or(false),
        };
        let first = &a.inputs[0];
        let d = arff::from_capture(&batch, options).map_err(|e| arff_fail(first, e))?;
        let remove = remove_set(a.remove.as_deref().or(c.remove.as_deref()))?;
        let d = remove_attributes(&d, &remove).map_err(|e| arff_fail(first, e))?;
        emit(a.output.as_deref(), |w| {
            write_arff(&d, w).map_err(|e| match e {
                ArffError::Io(e) => e,
                e => std::io::Error::other(e),
            })
        })?;
        if !self.quiet {
            log::info!(
                "converted {} packets from {} file(s) into {} attributes",
                d.num_instances(),
                a.inputs.len(),
                d.attributes.len()
            );
        }
        if self.json && a.output.is_some() {
            #[derive(Serialize)]
            struct Summary<'a> {
                relation: &'a str,
                instances: usize,
                attributes: Vec<&'a str>,
            }
            print!(
                "{}",
                json_line(&Summary {
                    relation: &d.relation,
                    instances: d.num_instances(),
                    attributes: d.attributes.iter().map(|a| a.name.as_str()).collect(),
                })
            );
        }
        Ok(())
    }

    fn merge(&self, a: MergeArgs) -> Outcome {
        let label = stem(&a.inputs[0]);
        let batch = self.read_batches(&a.inputs, &label, &a.csv)?;
        emit(a.output.as_deref(), |w| {
            write_capture_csv(&batch, w).map_err(|e| match e {
                ingest::IngestError::Io(e) => e,
                e => std::io::Error::other(e),
            })
        })?;
        log::info!("merged {} packets from {} file(s)", batch.len(), a.inputs.len());
        Ok(())
    }

    fn train_config(&self, a: &TrainArgs) -> Outcome<TrainConfig> {
        let t = &self.config.train;
        let defaults = TrainConfig::default();
        let kind = match a.kernel.as_deref().or(t.kernel.as_deref()) {
            Some(name) => name.parse::<KernelKind>().map_err(usage)?,
            None => defaults.kernel.kind,
        };
        let kernel = KernelSpec {
            kind,
            degree: a.degree.or(t.degree).unwrap_or(defaults.kernel.degree),
            gamma: a.gamma.or(t.gamma).unwrap_or(defaults.kernel.gamma),
            coef0: a.coef0.or(t.coef0).unwrap_or(defaults.kernel.coef0),
        };
        let selection = match a.selection.as_deref().or(t.selection.as_deref()) {
            Some(name) => Selection::from_name(name).ok_or_else(|| usage(format!("unknown selection {name:?}")))?,
            None => defaults.selection,
        };
        let config = TrainConfig {
            kernel,
            c: a.c.or(t.c).unwrap_or(defaults.c),
            tolerance: a.tolerance.or(t.tolerance).unwrap_or(defaults.tolerance),
            max_iterations: a.max_iterations.or(t.max_iterations).unwrap_or(defaults.max_iterations),
            cache_budget: a.cache_budget.or(t.cache_budget).unwrap_or(defaults.cache_budget),
            seed: self.seed.unwrap_or(defaults.seed),
            selection,
            parallel: !a.sequential && t.parallel.unwrap_or(true),
        };
        config.validate().map_err(|e| usage(e))?;
        Ok(config)
    }

    fn load_dataset(&self, path: &Path) -> Outcome<Dataset> {
        parse_arff(open(path)?).map_err(|e| arff_fail(path, e))
    }

    fn train(&self, a: TrainArgs) -> Outcome {
        let t = &self.config.train;
        let config = self.train_config(&a)?;
        let class = a.class.clone().or_else(|| t.class.clone()).unwrap_or_else(|| "Protocol".into());
        let split = SplitSpec {
            train_percent: a.split.or(t.split).unwrap_or(70.0),
            shuffle: a.shuffle || t.shuffle.unwrap_or(false),
            seed: self.seed.unwrap_or(1),
        };

        let d = self.load_dataset(&a.input)?;
        let remove = remove_set(a.remove.as_deref().or(t.remove.as_deref()))?;
        if let Some(pos) = d.attribute_index(&class) {
            if remove.contains(&(pos + 1)) {
                return Err(usage(format!("class attribute {class:?} is in the remove list")));
            }
        }
        let d = remove_attributes(&d, &remove).map_err(|e| arff_fail(&a.input, e))?;
        let d = d.with_class(&class).map_err(|e| arff_fail(&a.input, e))?;

        let rare_bucket = a.rare_min_support.or(t.rare_min_support).map(|min_support| RareBucket {
            min_support,
            label: a.rare_label.clone().or_else(|| t.rare_label.clone()).unwrap_or_else(|| "__rare__".into()),
        });
        let fit = FitOptions {
            scale: !a.no_scale && t.scale.unwrap_or(true),
            rare_bucket,
        };
        let spec = fit_encoder(&d, &class, &fit).map_err(|e| prep_fail(e, EXIT_TRAIN))?;
        for f in spec.degenerate_features() {
            log::warn!("feature {f:?} is constant and encodes to 0");
        }
        let encoded = encode(&d, &spec).map_err(|e| prep_fail(e, EXIT_TRAIN))?;
        let (train, test) = percentage_split(&encoded, &split).map_err(|e| prep_fail(e, EXIT_TRAIN))?;

        let fitted = train_ovo(&train, &config).map_err(|e| svm_fail(&a.input, e))?;
        if !fitted.all_converged() {
            log::warn!("some pairwise problems stopped at the iteration limit");
        }
        let mut model = fitted.model;
        model.split = Some(split.clone());
        let file = File::create(&a.output).map_err(|e| io_fail(&a.output, e))?;
        save_model(&model, file).map_err(|e| svm_fail(&a.output, e))?;
        log::info!("time taken to build model: {:.2} seconds", fitted.seconds);

        let info = run_info(&model, &d, &split);
        if self.json {
            #[derive(Serialize)]
            struct Summary<'a> {
                scheme: &'a str,
                relation: &'a str,
                instances: usize,
                attributes: &'a [String],
                test_mode: &'a str,
                train_rows: usize,
                test_rows: usize,
                dimension: usize,
                gamma: f64,
                pairs: usize,
                support_vectors: usize,
                converged: bool,
            }
            print!(
                "{}",
                json_line(&Summary {
                    scheme: &info.scheme,
                    relation: &info.relation,
                    instances: info.instances,
                    attributes: &info.attributes,
                    test_mode: &info.test_mode,
                    train_rows: train.len(),
                    test_rows: test.len(),
                    dimension: model.dimension,
                    gamma: model.config.kernel.gamma,
                    pairs: model.binaries.len(),
                    support_vectors: model.binaries.iter().map(|b| b.support_vectors.len()).sum(),
                    converged: fitted.pairs.iter().all(|p| p.converged),
                })
            );
        } else {
            let mut out = eval::format_run_info(&info);
            out.push_str(&format!(
                "\nTrain rows:   {}\nTest rows:    {}\nDimension:    {}\nGamma:        {}\nPairs:        {}\nSupport vectors: {}\n",
                train.len(),
                test.len(),
                model.dimension,
                model.config.kernel.gamma,
                model.binaries.len(),
                model.binaries.iter().map(|b| b.support_vectors.len()).sum::<usize>()
            ));
            print!("{out}");
        }
        Ok(())
    }

    fn evaluate(&self, a: EvaluateArgs) -> Outcome {
        let model = load_model(open(&a.model)?).map_err(|e| svm_fail(&a.model, e))?;
        let d = self.load_dataset(&a.input)?;
        let encoded = encode(&d, &model.encoder).map_err(|e| prep_fail(e, EXIT_SCHEMA))?;
        if encoded.dim() != model.dimension {
            return Err(fail(
                EXIT_SCHEMA,
                anyhow!("data encodes to {} features, model expects {}", encoded.dim(), model.dimension),
            ));
        }
        let on = a.on.as_deref().or(self.config.evaluate.on.as_deref()).unwrap_or("test");
        let (train_rows, test_rows) = match &model.split {
            Some(split) => split_indices(encoded.len(), split).map_err(|e| prep_fail(e, EXIT_SCHEMA))?,
            None => ((0..encoded.len()).collect(), (0..encoded.len()).collect()),
        };
        let rows = match on {
            "test" => test_rows.clone(),
            "train" => train_rows.clone(),
            "all" => (0..encoded.len()).collect(),
            other => return Err(usage(format!("--on must be test, train or all, not {other:?}"))),
        };
        let priors = encoded.subset(&train_rows).class_priors();
        let scored = encoded.subset(&rows);
        let start = std::time::Instant::now();
        let predicted = model.predict_all(&scored).map_err(|e| svm_fail(&a.input, e))?;
        log::info!(
            "time taken to test model on {on} rows: {:.2} seconds",
            start.elapsed().as_secs_f64()
        );
        let m = confusion(&scored.labels, &predicted, &model.label_names).map_err(|e| fail(EXIT_SCHEMA, e))?;
        let summary = summarize(&m, &priors, &m.row_sums()).map_err(|e| fail(EXIT_SCHEMA, e))?;

        let label = a.label.clone().unwrap_or_else(|| batch_label(&d.relation));
        if self.json {
            let report = EvalReport {
                batch_label: Some(&label),
                task: Some(&model.encoder.class_attribute),
                train_percent: model.split.as_ref().map(|s| s.train_percent),
                summary: &summary,
                confusion_matrix: &m,
            };
            let mut text = eval::to_json(&report);
            text.push('\n');
            print!("{text}");
        } else {
            let split = model.split.clone().unwrap_or(SplitSpec {
                train_percent: 100.0,
                ..SplitSpec::default()
            });
            let mut info = run_info(&model, &d, &split);
            if on != "test" {
                info.test_mode = format!("evaluate on {on} rows");
            }
            print!("{}", eval::format_report(Some(&info), &summary, &m, Timings::default()));
        }
        Ok(())
    }

    fn predict(&self, a: PredictArgs) -> Outcome {
        let model = load_model(open(&a.model)?).map_err(|e| svm_fail(&a.model, e))?;
        let d = self.load_dataset(&a.input)?;
        let bound = model.encoder.bind(&d.attributes).map_err(|e| prep_fail(e, EXIT_SCHEMA))?;
        let mut row = Vec::new();
        let mut predictions = Vec::with_capacity(d.num_instances());
        for (i, inst) in d.instances.iter().enumerate() {
            bound.encode_row(inst, &mut row).map_err(|e| prep_fail(e, EXIT_SCHEMA))?;
            let label = model.predict(&row).map_err(|e| svm_fail(&a.input, e))?;
            let actual = bound.encode_class(inst, i).ok().map(|k| model.label_names[k].clone());
            predictions.push((i + 1, model.label_names[label].clone(), actual));
        }
        emit(a.output.as_deref(), |w| {
            if self.json {
                #[derive(Serialize)]
                struct Row<'a> {
                    row: usize,
                    predicted: &'a str,
                    actual: Option<&'a str>,
                }
                let rows: Vec<Row> = predictions
                    .iter()
                    .map(|(row, p, a)| Row {
                        row: *row,
                        predicted: p,
                        actual: a.as_deref(),
                    })
                    .collect();
                w.write_all(json_line(&rows).as_bytes())
            } else {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["row", "predicted", "actual"])?;
                for (row, p, a) in &predictions {
                    csv.write_record([row.to_string().as_str(), p, a.as_deref().unwrap_or("?")])?;
                }
                csv.flush()
            }
        })
    }

    fn report(&self, a: ReportArgs) -> Outcome {
        let r = &self.config.report;
        if !a.labels.is_empty() && a.labels.len() != a.inputs.len() {
            return Err(usage(format!(
                "{} labels given for {} inputs",
                a.labels.len(),
                a.inputs.len()
            )));
        }
        let top_k = match a.top_k.or(r.top_k).unwrap_or(3) {
            0 => None,
            k => Some(k),
        };
        let format = a.format.clone().or_else(|| r.format.clone()).unwrap_or_else(|| {
            if self.json { "json" } else { "text" }.into()
        });
        if !matches!(format.as_str(), "text" | "csv" | "json") {
            return Err(usage(format!("unknown report format {format:?}")));
        }
        let options = ReportOptions {
            top_k,
            ..ReportOptions::default()
        };
        let parse_options = self.parse_options(&a.csv)?;

        let mut reports: Vec<TrafficReport> = Vec::with_capacity(a.inputs.len());
        for (i, path) in a.inputs.iter().enumerate() {
            let label = a.labels.get(i).cloned().unwrap_or_else(|| stem(path));
            let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let dataset = if is_csv {
                let batch = self.read_batch(path, &label, &parse_options)?;
                if batch.is_empty() {
                    None
                } else {
                    Some(arff::from_capture(&batch, ConvertOptions::default()).map_err(|e| arff_fail(path, e))?)
                }
            } else {
                Some(self.load_dataset(path)?)
            };
            let report = match dataset {
                Some(d) => report::batch_report(&label, &d, &options)
                    .map_err(|e| fail(EXIT_PARSE, anyhow!(e).context(path.display().to_string())))?,
                None => TrafficReport::empty(&label),
            };
            reports.push(report);
        }

        let accuracy = if a.evals.is_empty() {
            None
        } else {
            let mut entries = Vec::new();
            for path in &a.evals {
                entries.push(read_eval(path)?);
            }
            Some(report::accuracy_table(&reports, &entries))
        };
        let text = match format.as_str() {
            "csv" => report::render_csv(&reports, accuracy.as_ref()),
            "json" => report::render_json(&reports, accuracy.as_ref()),
            _ => report::render_text(&reports, accuracy.as_ref(), &options),
        };
        emit(a.output.as_deref(), |w| w.write_all(text.as_bytes()))
    }
}

fn read_eval(path: &Path) -> Outcome<AccuracyEntry> {
    let text = std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| path.display().to_string())
        .map_err(|e| fail(EXIT_PARSE, e))?;
    let field = |key: &str| v.get(key).and_then(serde_json::Value::as_str).map(str::to_string);
    let accuracy = v
        .pointer("/summary/accuracy")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| usage(format!("{}: no summary.accuracy field", path.display())))?;
    Ok(AccuracyEntry {
        batch_label: field("batch_label").unwrap_or_else(|| stem(path)),
        task: field("task").unwrap_or_else(|| "accuracy".into()),
        accuracy,
        train_percent: v.get("train_percent").and_then(serde_json::Value::as_f64),
    })
}

/// Relation name without any filter suffix appended by `--remove`.
fn batch_label(relation: &str) -> String {
    relation.split("-weka.filters.").next().unwrap_or(relation).to_string()
}

fn run_info(model: &SvmOvoModel, d: &Dataset, split: &SplitSpec) -> RunInfo {
    RunInfo {
        scheme: format!("trafsvm.OvoSVC {}", model.config.scheme_options(model.dimension)),
        relation: d.relation.clone(),
        instances: d.num_instances(),
        attributes: d.attributes.iter().map(|a| a.name.clone()).collect(),
        test_mode: format!("split {:.1}% train, remainder test", split.train_percent),
    }
}
