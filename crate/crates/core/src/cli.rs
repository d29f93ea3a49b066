//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure. Every command first prints its resolved settings
//! as `#`-prefixed lines on stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::data::{Dataset, FilterIndex, Triple};
use crate::error::{Error, Result};
use crate::eval::{
    categorize_relations, category_shares, evaluate, evaluate_by_category, inspect_attention,
    result_rows, Ranker, RESULTS_HEADER,
};
use crate::model::{EncoderKind, InitStrategy, ModelParams, ModelShape};
use crate::multirel::{generate, multirel_stats, to_tsv};
use crate::trainer::{log_csv, loss_grad_check, train, LossCheckSpec, TrainConfig};
use crate::transe::{pretrain_transe, TransEConfig};

#[derive(Debug, Parser)]
#[command(
    name = "convmr",
    version,
    about = "Multi-relation convolutional KG embedding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entity, relation and split counts as one CSV row.
    Stats(StatsArgs),
    /// Multi-relation instances of the training split as TSV.
    Generate(GenerateArgs),
    /// TransE pretraining; writes a checkpoint usable with `--init-checkpoint`.
    Pretrain(PretrainArgs),
    Train(TrainArgs),
    /// Filtered MR / Hits@10 on a split.
    Evaluate(EvaluateArgs),
    /// Relation categories, or per-category results with `--checkpoint`.
    Categories(CategoriesArgs),
    /// Attention weights of a trained model for a relation set.
    Attention(AttentionArgs),
    /// Finite-difference check of the loss gradient.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum EncoderArg {
    AttnAverage,
    Average,
    Gru,
    Bigru,
}

impl From<EncoderArg> for EncoderKind {
    fn from(e: EncoderArg) -> Self {
        match e {
            EncoderArg::AttnAverage => EncoderKind::AttnAverage,
            EncoderArg::Average => EncoderKind::Average,
            EncoderArg::Gru => EncoderKind::Gru,
            EncoderArg::Bigru => EncoderKind::Bigru,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum SplitArg {
    Train,
    Valid,
    Test,
}

impl SplitArg {
    fn name(self) -> &'static str {
        match self {
            SplitArg::Train => "train",
            SplitArg::Valid => "valid",
            SplitArg::Test => "test",
        }
    }

    fn pick(self, ds: &Dataset) -> &[Triple] {
        match self {
            SplitArg::Train => &ds.train,
            SplitArg::Valid => &ds.valid,
            SplitArg::Test => &ds.test,
        }
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Directory with train.txt, valid.txt and test.txt.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    data: PathBuf,
    /// TSV destination for the instances (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV destination for the set-size histogram and top relation sets.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    /// Number of most frequent relation sets to report.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct PretrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint destination.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with TransE settings (epochs, lr, margin, k, seed).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON file with training settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the trained checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Where to write the training log CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    encoder: Option<EncoderArg>,
    /// Train on plain triples only.
    #[arg(long)]
    no_multirel: bool,
    /// Use the plain average encoder.
    #[arg(long)]
    no_attention: bool,
    /// Initialize entity and relation tables from this checkpoint.
    #[arg(long)]
    init_checkpoint: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    num_batches: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CategoriesArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttentionArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Comma-separated relation labels.
    #[arg(long, value_delimiter = ',', required = true)]
    relations: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    tau: usize,
    #[arg(long, value_enum, default_value = "attn_average")]
    encoder: EncoderArg,
    /// Relation-set sizes to check.
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![1usize, 2, 4])]
    set_sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        return 3;
    }
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Stats(a) => stats(a),
        Command::Generate(a) => generate_cmd(a),
        Command::Pretrain(a) => pretrain(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Categories(a) => categories(a),
        Command::Attention(a) => attention(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
}

fn header(command: &str, settings: &serde_json::Value) {
    println!("# command: {command}");
    println!("# settings: {settings}");
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

fn load_model(data: &Dataset, path: &Path) -> Result<ModelParams> {
    let ck = Checkpoint::load(path)?;
    ck.check_vocab(&data.vocab);
    if ck.params.num_entities() != data.vocab.num_entities()
        || ck.params.num_relations() != data.vocab.num_relations()
    {
        return Err(Error::Checkpoint(format!(
            "checkpoint covers {} entities / {} relations, data has {} / {}",
            ck.params.num_entities(),
            ck.params.num_relations(),
            data.vocab.num_entities(),
            data.vocab.num_relations()
        )));
    }
    Ok(ck.params)
}

fn stats(a: StatsArgs) -> Result<i32> {
    header("stats", &json!({ "data": a.data, "out": a.out }));
    let ds = Dataset::load(&a.data)?;
    let s = ds.stats();
    let text = format!(
        "{}\n{}\n",
        crate::data::DatasetStats::CSV_HEADER,
        s.csv_row()
    );
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn generate_cmd(a: GenerateArgs) -> Result<i32> {
    header(
        "generate",
        &json!({ "data": a.data, "out": a.out, "stats_out": a.stats_out, "top": a.top }),
    );
    let ds = Dataset::load(&a.data)?;
    let multi = generate(&ds.train);
    let st = multirel_stats(&multi);
    let mut csv = String::from("kind,key,count\n");
    for (size, count) in &st.size_histogram {
        csv.push_str(&format!("set_size,{size},{count}\n"));
    }
    for (rels, count) in st.ranking.iter().take(a.top) {
        let labels: Vec<&str> = rels
            .iter()
            .map(|&r| ds.vocab.relation_label(r).unwrap_or("?"))
            .collect();
        csv.push_str(&format!("relation_set,\"{}\",{count}\n", labels.join(",")));
    }
    let tsv = to_tsv(&ds.vocab, &multi)?;
    match (&a.out, &a.stats_out) {
        (Some(out), stats_out) => {
            emit(Some(out), &tsv)?;
            emit(stats_out.as_deref(), &csv)?;
        }
        (None, Some(stats_out)) => {
            emit(None, &tsv)?;
            emit(Some(stats_out), &csv)?;
        }
        (None, None) => {
            emit(None, &tsv)?;
            eprint!("{csv}");
        }
    }
    Ok(0)
}

fn pretrain(a: PretrainArgs) -> Result<i32> {
    let mut cfg: TransEConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => TransEConfig::default(),
    };
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.margin {
        cfg.margin = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    header(
        "pretrain",
        &json!({ "data": a.data, "out": a.out, "transe": cfg }),
    );
    let ds = Dataset::load(&a.data)?;
    let (emb, losses) = pretrain_transe(&ds, &cfg)?;
    for (e, l) in losses.iter().enumerate() {
        log::info!("transe epoch {e}: mean hinge {l:.6}");
    }
    let shape = ModelShape {
        k: cfg.k,
        tau: 1,
        num_entities: ds.vocab.num_entities(),
        num_relations: ds.vocab.num_relations(),
        encoder: EncoderKind::Average,
    };
    let params = ModelParams::with_pretrained(shape, cfg.seed, emb.entity, emb.relation)?;
    Checkpoint::new(params, &ds.vocab).save(&a.out)?;
    println!("epoch,mean_hinge");
    for (e, l) in losses.iter().enumerate() {
        println!("{e},{l}");
    }
    Ok(0)
}

fn resolve_train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut c: TrainConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(e) = a.encoder {
        c.encoder = e.into();
    }
    if a.no_attention {
        c.encoder = EncoderKind::Average;
    }
    if a.no_multirel {
        c.multirel = false;
    }
    if let Some(p) = &a.init_checkpoint {
        c.init = InitStrategy::Pretrained;
        c.pretrained_checkpoint = Some(p.clone());
    }
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => {
            $(if let Some(v) = a.$flag { c.$field = v; })*
        };
    }
    set!(seed <- seed, threads <- threads, epochs <- epochs, k <- k, tau <- tau,
         num_batches <- num_batches, initial_lr <- lr, lambda <- lambda,
         negatives_per_positive <- negatives);
    c.validate()?;
    Ok(c)
}

fn train_cmd(a: TrainArgs) -> Result<i32> {
    let config = resolve_train_config(&a)?;
    header(
        "train",
        &json!({ "data": a.data, "checkpoint": a.checkpoint, "out": a.out, "config": config }),
    );
    let ds = Dataset::load(&a.data)?;
    let outcome = train(&ds, &config)?;
    if let Some(p) = &a.checkpoint {
        Checkpoint::new(outcome.params, &ds.vocab).save(p)?;
    }
    emit(a.out.as_deref(), &log_csv(&config, &outcome.log))?;
    Ok(0)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<i32> {
    header(
        "evaluate",
        &json!({ "data": a.data, "checkpoint": a.checkpoint, "split": a.split.name(),
                 "threads": a.threads, "out": a.out }),
    );
    let ds = Dataset::load(&a.data)?;
    let params = load_model(&ds, &a.checkpoint)?;
    let filter = FilterIndex::build(&ds);
    let ranker = Ranker::new(&params)?;
    let result = pool(a.threads)?.install(|| evaluate(a.split.pick(&ds), &ranker, &filter))?;
    let mut text = format!("{RESULTS_HEADER}\n");
    for row in result_rows(a.split.name(), "all", &result) {
        text.push_str(&row);
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn categories(a: CategoriesArgs) -> Result<i32> {
    header(
        "categories",
        &json!({ "data": a.data, "checkpoint": a.checkpoint, "split": a.split.name(),
                 "threads": a.threads, "out": a.out }),
    );
    let ds = Dataset::load(&a.data)?;
    let cats = categorize_relations(&ds.train);
    let fallback: Vec<Triple> = ds.train.iter().chain(&ds.valid).copied().collect();
    let split = a.split.pick(&ds);
    let text = match &a.checkpoint {
        None => {
            let mut text = String::from("relation,n_s,n_o,category\n");
            for (r, p) in &cats {
                let label = ds.vocab.relation_label(*r).unwrap_or("?");
                text.push_str(&format!("{label},{},{},{}\n", p.n_s, p.n_o, p.category));
            }
            text.push_str("\nsplit,category,share_percent\n");
            for (c, share) in category_shares(split, &cats, &fallback)? {
                text.push_str(&format!("{},{c},{share}\n", a.split.name()));
            }
            text
        }
        Some(ck) => {
            let params = load_model(&ds, ck)?;
            let filter = FilterIndex::build(&ds);
            let ranker = Ranker::new(&params)?;
            let results = pool(a.threads)?
                .install(|| evaluate_by_category(split, &ranker, &filter, &cats, &fallback))?;
            let mut text = format!("{RESULTS_HEADER}\n");
            for (c, r) in &results {
                for row in result_rows(a.split.name(), c.as_str(), r) {
                    text.push_str(&row);
                    text.push('\n');
                }
            }
            text
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn attention(a: AttentionArgs) -> Result<i32> {
    header(
        "attention",
        &json!({ "data": a.data, "checkpoint": a.checkpoint, "relations": a.relations,
                 "out": a.out }),
    );
    let ds = Dataset::load(&a.data)?;
    let params = load_model(&ds, &a.checkpoint)?;
    let labels: Vec<&str> = a.relations.iter().map(String::as_str).collect();
    let weights = inspect_attention(&labels, &params, &ds.vocab)?;
    let mut text = String::from("relation,weight\n");
    for (l, w) in weights {
        text.push_str(&format!("{l},{w}\n"));
    }
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn gradcheck(a: GradcheckArgs) -> Result<i32> {
    let encoder: EncoderKind = a.encoder.into();
    header(
        "gradcheck",
        &json!({ "k": a.k, "tau": a.tau, "encoder": encoder, "n": a.set_sizes,
                 "seed": a.seed, "step": a.step, "tolerance": a.tolerance }),
    );
    println!("encoder,n,checked,skipped,max_rel_error,pass");
    let mut all_ok = true;
    for &n in &a.set_sizes {
        if n == 0 {
            return Err(Error::Config("relation-set size must be positive".into()));
        }
        let spec = LossCheckSpec {
            encoder,
            k: a.k,
            tau: a.tau,
            set_size: n,
            seed: a.seed,
            step: a.step,
            ..Default::default()
        };
        let rep = loss_grad_check(&spec)?;
        let ok = rep.max_rel_error < a.tolerance;
        all_ok &= ok;
        println!(
            "{encoder},{n},{},{},{:e},{ok}",
            rep.checked, rep.skipped, rep.max_rel_error
        );
    }
    Ok(if all_ok { 0 } else { 3 })
}
