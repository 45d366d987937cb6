use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::backend::Backend;
use crate::cli::config::RunConfig;
use crate::corpus::{synth_lines, SentenceRecord, SplitBundle, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{emit_report, evaluate_generation, k_sweep, metric_map, standard_study, Report};
use crate::generator::{GeneratorHandle, RemoteGenerator, Seq2Seq};
use crate::meta::{build_index, build_vocab, pretrain_policy, resolve, run_local, train, warm_up, Mode};
use crate::metrics::round4;
use crate::retrieval::{expand, read_pairs_jsonl, write_pairs_jsonl, InvertedIndex};
use crate::selector::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Index,
    Expand,
    Pretrain,
    Train,
    Eval,
    RankEval,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Index => "index",
            Command::Expand => "expand",
            Command::Pretrain => "pretrain",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::RankEval => "rank-eval",
            Command::Sweep => "sweep",
        }
    }
}

pub const DATA: &str = "data.jsonl";
pub const VOCAB: &str = "vocab.json";
pub const INDEX: &str = "index.json";
pub const PAIRS: &str = "pairs.jsonl";
pub const POLICY_PRETRAINED: &str = "policy_pretrained.json";
pub const GENERATOR_PRETRAINED: &str = "generator_pretrained.bin";
pub const POLICY: &str = "policy.json";
pub const GENERATOR: &str = "generator.bin";
pub const HISTORY: &str = "history.json";
pub const REPORT: &str = "report.json";
pub const RANKING: &str = "ranking.json";
pub const SWEEP: &str = "sweep.json";
pub const LR_GRID: &str = "lr_grid.json";
pub const CONFIG: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Stamp {
    artifact: String,
    command: String,
    config_hash: String,
}

/// A configured run rooted at its output directory.
pub struct Run {
    pub cfg: RunConfig,
    pub hash: String,
}

impl Run {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash })
    }

    pub fn path(&self, artifact: &str) -> PathBuf {
        self.cfg.out.join(artifact)
    }

    fn stamp_path(&self, artifact: &str) -> PathBuf {
        self.cfg.out.join(format!("{artifact}.stamp"))
    }

    fn publish(&self, artifact: &str, by: Command) -> Result<PathBuf> {
        let stamp = Stamp {
            artifact: artifact.to_string(),
            command: by.name().to_string(),
            config_hash: self.hash.clone(),
        };
        let p = self.stamp_path(artifact);
        fs::write(&p, serde_json::to_string(&stamp)? + "\n").map_err(|e| Error::io(&p, e))?;
        Ok(self.path(artifact))
    }

    /// Path of an upstream artifact produced under this same configuration.
    fn require(&self, artifact: &str, by: Command) -> Result<PathBuf> {
        let path = self.path(artifact);
        let stamp_path = self.stamp_path(artifact);
        if !path.exists() || !stamp_path.exists() {
            return Err(Error::MissingArtifact {
                path,
                command: by.name(),
            });
        }
        let text = fs::read_to_string(&stamp_path).map_err(|e| Error::io(&stamp_path, e))?;
        let stamp: Stamp = serde_json::from_str(&text)?;
        if stamp.config_hash != self.hash {
            return Err(Error::StaleArtifact {
                path,
                command: by.name(),
                found: stamp.config_hash,
                expected: self.hash.clone(),
            });
        }
        Ok(path)
    }

    fn prepare_out(&self) -> Result<()> {
        let out = &self.cfg.out;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let p = self.path(CONFIG);
        let doc = serde_json::json!({ "config_hash": self.hash, "config": self.cfg });
        fs::write(&p, serde_json::to_string_pretty(&doc)? + "\n").map_err(|e| Error::io(&p, e))
    }

    fn bundle(&self) -> Result<SplitBundle> {
        match &self.cfg.data {
            Some(data) => SplitBundle::load_jsonl_with(data, self.cfg.pipeline.max_len),
            None => SplitBundle::load_jsonl_with(self.require(DATA, Command::Synth)?, self.cfg.pipeline.max_len),
        }
    }

    fn vocab(&self) -> Result<Vocabulary> {
        Vocabulary::load(self.require(VOCAB, Command::Index)?)
    }

    fn generator(&self, artifact: &str, by: Command, vocab: &Vocabulary) -> Result<Backend> {
        let p = self.require(artifact, by)?;
        Backend::load(&p, vocab, self.cfg.pipeline.generator, self.cfg.adapter_url.as_deref())
    }

    pub fn execute(&self, command: Command) -> Result<()> {
        self.prepare_out()?;
        match command {
            Command::Synth => self.synth(),
            Command::Index => self.index(),
            Command::Expand => self.expand(),
            Command::Pretrain => self.pretrain(),
            Command::Train => self.train(),
            Command::Eval => self.eval(),
            Command::RankEval => self.rank_eval(),
            Command::Sweep => self.sweep(),
        }
    }

    fn synth(&self) -> Result<()> {
        if let Some(data) = &self.cfg.data {
            return Err(Error::InvalidArgument(format!(
                "config reads its dataset from {}; synth has nothing to do",
                data.display()
            )));
        }
        let bundle = SplitBundle::from_lines(&synth_lines(&self.cfg.synth), self.cfg.pipeline.max_len)?;
        bundle.save_jsonl(self.path(DATA))?;
        self.publish(DATA, Command::Synth)?;
        Ok(())
    }

    fn index(&self) -> Result<()> {
        let bundle = self.bundle()?;
        build_vocab(&bundle, &self.cfg.pipeline)?.save(self.path(VOCAB))?;
        self.publish(VOCAB, Command::Index)?;
        build_index(&bundle, &self.cfg.pipeline)?.save(self.path(INDEX))?;
        self.publish(INDEX, Command::Index)?;
        Ok(())
    }

    fn expand(&self) -> Result<()> {
        let bundle = self.bundle()?;
        let index = InvertedIndex::load(self.require(INDEX, Command::Index)?)?;
        let pairs = expand(&index, &bundle.train_sources, self.cfg.pipeline.trainer.k);
        write_pairs_jsonl(&pairs, self.path(PAIRS))?;
        self.publish(PAIRS, Command::Expand)?;
        Ok(())
    }

    fn pretrain(&self) -> Result<()> {
        let bundle = self.bundle()?;
        let vocab = self.vocab()?;
        let weak = read_pairs_jsonl(self.require(PAIRS, Command::Expand)?)?;
        let (items, _) = resolve(&bundle, &vocab, &weak)?;
        let p = &self.cfg.pipeline;
        pretrain_policy(p, &items)?.save(self.path(POLICY_PRETRAINED))?;
        self.publish(POLICY_PRETRAINED, Command::Pretrain)?;

        let mut gen = match &self.cfg.adapter_url {
            None => Backend::Local(Seq2Seq::new(vocab.len(), p.generator, p.seed())),
            Some(url) => Backend::Remote(RemoteGenerator::new(url.as_str(), vocab, p.generator.batch_size)),
        };
        if self.cfg.mode != Mode::NoPretrainGenerator {
            warm_up(p, &mut gen, &items)?;
        }
        gen.save(&self.path(GENERATOR_PRETRAINED))?;
        self.publish(GENERATOR_PRETRAINED, Command::Pretrain)?;
        Ok(())
    }

    fn train(&self) -> Result<()> {
        let bundle = self.bundle()?;
        let vocab = self.vocab()?;
        let weak = read_pairs_jsonl(self.require(PAIRS, Command::Expand)?)?;
        let (items, dev) = resolve(&bundle, &vocab, &weak)?;
        let mut policy = PolicyParams::load(self.require(POLICY_PRETRAINED, Command::Pretrain)?)?;
        let mut gen = self.generator(GENERATOR_PRETRAINED, Command::Pretrain, &vocab)?;
        let outcome = train(
            &self.cfg.pipeline.trainer,
            self.cfg.mode,
            &mut policy,
            &mut gen,
            &items,
            &dev,
            &mut |_| Ok(()),
        )?;
        policy.save(self.path(POLICY))?;
        self.publish(POLICY, Command::Train)?;
        gen.save(&self.path(GENERATOR))?;
        self.publish(GENERATOR, Command::Train)?;
        let p = self.path(HISTORY);
        fs::write(&p, serde_json::to_string_pretty(&outcome)? + "\n").map_err(|e| Error::io(&p, e))?;
        self.publish(HISTORY, Command::Train)?;
        Ok(())
    }

    fn test_sources(bundle: &SplitBundle) -> Vec<SentenceRecord> {
        bundle.test.iter().map(|p| p.src.clone()).collect()
    }

    fn eval(&self) -> Result<()> {
        let bundle = self.bundle()?;
        let vocab = self.vocab()?;
        let index = InvertedIndex::load(self.require(INDEX, Command::Index)?)?;
        let policy = PolicyParams::load(self.require(POLICY, Command::Train)?)?;
        let gen = self.generator(GENERATOR, Command::Train, &vocab)?;
        let p = &self.cfg.pipeline;
        let metrics = evaluate_generation(&gen, &vocab, &bundle.test, p.alpha, p.decode_max_len)?;
        let dev: Vec<_> = bundle
            .dev
            .iter()
            .map(|pair| crate::generator::IdPair::from_pair(&vocab, pair))
            .collect();
        let dev_ppl = if dev.is_empty() { None } else { Some(gen.perplexity(&dev)?) };
        let study = standard_study(&index, &bundle.corpus, &policy, &Self::test_sources(&bundle))?;
        let report = Report {
            metrics: metric_map(&metrics, dev_ppl),
            config_hash: self.hash.clone(),
            ..Default::default()
        }
        .with_ranking(&study);
        emit_report(&report, self.path(REPORT))?;
        self.publish(REPORT, Command::Eval)?;
        Ok(())
    }

    fn rank_eval(&self) -> Result<()> {
        let bundle = self.bundle()?;
        let index = InvertedIndex::load(self.require(INDEX, Command::Index)?)?;
        let policy = PolicyParams::load(self.require(POLICY, Command::Train)?)?;
        let study = standard_study(&index, &bundle.corpus, &policy, &Self::test_sources(&bundle))?;
        let report = Report {
            config_hash: self.hash.clone(),
            ..Default::default()
        }
        .with_ranking(&study);
        emit_report(&report, self.path(RANKING))?;
        self.publish(RANKING, Command::RankEval)?;
        Ok(())
    }

    /// K sweep, then the optional generator learning-rate grid at the
    /// configured K. Both always use the built-in generator.
    fn sweep(&self) -> Result<()> {
        if self.cfg.adapter_url.is_some() {
            return Err(Error::InvalidArgument("sweep runs the built-in generator only".into()));
        }
        let bundle = self.bundle()?;
        let p = &self.cfg.pipeline;
        let points = k_sweep(p, &bundle, &self.cfg.sweep_ks)?;
        let report = Report {
            config_hash: self.hash.clone(),
            ..Default::default()
        }
        .with_sweep(&points);
        emit_report(&report, self.path(SWEEP))?;
        self.publish(SWEEP, Command::Sweep)?;

        if !self.cfg.lr_grid.is_empty() {
            let prepared = crate::meta::prepare(&bundle, p)?;
            let mut rows = Vec::new();
            for &lr in &self.cfg.lr_grid {
                let mut cfg = p.clone();
                cfg.trainer.lr_generator = lr;
                cfg.pretrain_lr = lr;
                let run = run_local(&bundle, &prepared, &cfg, self.cfg.mode)?;
                rows.push(LrRow {
                    lr,
                    dev_ppl: round4(run.dev_ppl),
                    bleu2: round4(run.metrics.bleu2),
                });
            }
            let best = rows
                .iter()
                .min_by(|a, b| a.dev_ppl.total_cmp(&b.dev_ppl))
                .map(|r| r.lr);
            let doc = serde_json::json!({ "config_hash": self.hash, "rows": rows, "best_lr": best });
            write_json(&self.path(LR_GRID), &doc)?;
            self.publish(LR_GRID, Command::Sweep)?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct LrRow {
    lr: f64,
    dev_ppl: f64,
    bleu2: f64,
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}
