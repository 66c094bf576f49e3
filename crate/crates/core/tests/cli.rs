use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use corpusforge::corpus::PairKind;
use corpusforge::instances::{read_record_file, Objective};
use serde_json::Value;
use unicode_script::{Script, UnicodeScript};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_corpusforge"));
    c.env_remove("CORPUSFORGE_THREADS");
    c
}

fn mini_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini/config.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn corpus_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/mini/corpus")
        .display()
        .to_string()
}

// Expected values below come from an independent Python count over the
// fixture (str.split plus unicodedata punctuation isolation, NFC).
const MINI_STATS: &str = "\
lang,source,docs,words,chars
bn,wikipedia,14,191,1032
bn,parallel_translation,6,37,211
en,wikipedia,30,587,2975
en,crawl,8,114,554
en,parallel_translation,14,125,591
hi,wikipedia,22,434,1945
hi,crawl,6,88,377
hi,parallel_translation,8,62,262
hi,parallel_transliteration,5,22,97
hi-tr,parallel_transliteration,5,22,119
mr,wikipedia,12,150,875
ta,wikipedia,10,108,830
";

// (587 / n)^0.7 evaluated with 40-digit decimals.
const MINI_PLAN: &str = "\
lang,n,multiplier,upsampled
bn,191,2.194438,419
en,587,1.000000,587
hi,434,1.235389,536
mr,150,2.598859,390
ta,108,3.270770,353
";

#[test]
fn stats_matches_independent_count() {
    let o = run(&["stats", "-c", mini_config().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), MINI_STATS);
}

#[test]
fn plan_matches_oracle() {
    let o = run(&["plan", "-c", mini_config().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), MINI_PLAN);
}

#[test]
fn alpha_one_flattens_plan() {
    let o = run(&["plan", "-c", mini_config().to_str().unwrap(), "--alpha", "1"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        assert_eq!(line.split(',').nth(2), Some("1.000000"), "{line}");
    }
}

#[test]
fn single_language_plan_has_unit_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("[[corpus]]\npath = \"{}/ta.wikipedia.txt\"\n", corpus_dir()),
    );
    let o = run(&["plan", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "lang,n,multiplier,upsampled\nta,108,1.000000,108\n");
}

#[test]
fn empty_corpus_dir_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("corpus")).unwrap();
    let cfg = write_config(dir.path(), "corpus_dir = \"corpus\"\n");
    let o = run(&["stats", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "lang,source,docs,words,chars\n");
}

#[test]
fn missing_files_exit_2_with_every_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[corpus]]\npath = \"gone/hi.wikipedia.txt\"\n[[corpus]]\npath = \"gone/bn.crawl.txt\"\n",
    );
    for cmd in ["stats", "build"] {
        let o = run(&[cmd, "-c", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        let err = stderr(&o);
        assert!(err.contains("hi.wikipedia.txt") && err.contains("bn.crawl.txt"), "{err}");
    }
}

#[test]
fn stage_failure_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("corpus_dir = \"{}\"\n[vocab]\ntarget_size = 10\n", corpus_dir()),
    );
    let o = run(&["build", "-c", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stage vocab"), "{}", stderr(&o));
}

fn build(out: &Path, extra: &[&str], threads: Option<&str>) -> Value {
    let mut c = bin();
    c.args(["build", "-c", mini_config().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    c.args(extra);
    if let Some(t) = threads {
        c.env("CORPUSFORGE_THREADS", t);
    }
    let o = c.output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let written: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
    printed
}

#[test]
fn build_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let a = build(&dir.path().join("a"), &[], None);
    let b = build(&dir.path().join("b"), &[], Some("1"));
    assert_eq!(a, b);
    let c = build(&dir.path().join("c"), &["--seed", "7"], None);
    assert_eq!(c["seed"], 7);
    assert_ne!(a["artifacts"]["mlm.murc"], c["artifacts"]["mlm.murc"]);
    assert_eq!(a["artifacts"]["stats.csv"], c["artifacts"]["stats.csv"]);
}

#[test]
fn manifest_counts_match_records() {
    let dir = tempfile::tempdir().unwrap();
    let m = build(dir.path(), &[], None);
    let mlm = read_record_file(&dir.path().join("mlm.murc")).unwrap();
    let tlm = read_record_file(&dir.path().join("tlm.murc")).unwrap();
    assert!(mlm.instances.iter().all(|i| i.objective == Objective::Mlm));
    assert!(tlm.instances.iter().all(|i| i.objective == Objective::Tlm));
    assert_eq!(m["instances"]["mlm"], mlm.instances.len() as u64);
    let kind = |k| tlm.instances.iter().filter(|i| i.pair_kind == Some(k)).count() as u64;
    assert_eq!(m["instances"]["tlm_translated"], kind(PairKind::Translated));
    assert_eq!(m["instances"]["tlm_transliterated"], kind(PairKind::Transliterated));
    let pairs = m["pairs"]["translated"].as_u64().unwrap() + m["pairs"]["transliterated"].as_u64().unwrap();
    assert_eq!(pairs, tlm.instances.len() as u64 + m["tlm_dropped"].as_u64().unwrap());
    assert!(kind(PairKind::Transliterated) > 0);

    let vocab_text = std::fs::read(dir.path().join("vocab.txt")).unwrap();
    let hash = <sha2::Sha256 as sha2::Digest>::digest(&vocab_text);
    assert_eq!(mlm.vocab_hash_prefix, hash[..2]);
    let lines = vocab_text.iter().filter(|&&b| b == b'\n').count() as u64;
    assert_eq!(m["vocab_size"], lines);

    let cfg = corpusforge::pipeline::PipelineConfig::load(&mini_config()).unwrap();
    let max_pred = cfg.instances.max_predictions();
    for inst in mlm.instances.iter().chain(&tlm.instances) {
        inst.check(cfg.instances.max_seq_len, max_pred).unwrap();
    }
}

#[test]
fn disabling_transliteration_drops_transliterated_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "corpus_dir = \"{}\"\nseed = 3\n[vocab]\ntarget_size = 600\n[instances]\nmax_seq_len = 128\n[translit]\nenabled = false\n",
            corpus_dir()
        ),
    );
    let o = run(&["build", "-c", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["pairs"]["transliterated"], 0);
    assert_eq!(m["instances"]["tlm_transliterated"], 0);
    assert_eq!(m["translit"]["enabled"], false);
}

#[test]
fn train_vocab_then_tokenize_and_fertility() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["train-vocab", "-c", mini_config().to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vocab = dir.path().join("vocab.txt");
    assert!(std::fs::read_to_string(&vocab).unwrap().starts_with("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n"));
    assert!(dir.path().join("script.csv").is_file());

    let mut child = bin()
        .args(["tokenize", "--vocab", vocab.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all("India is a country\n\nभारत एक देश है।\n".as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0].replace(" ##", ""), "India is a country", "{text}");
    assert_eq!(lines[1], "");
    assert!(lines[2].ends_with("।"), "{text}");

    let o = run(&["fertility", "-c", mini_config().to_str().unwrap(), "--vocab", vocab.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("lang,words,subwords,fertility\nbn,191,"), "{csv}");
    for line in csv.lines().skip(1) {
        let f: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(f >= 1.0);
    }
}

#[test]
fn translit_command_writes_pair_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["translit", "-c", mini_config().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let hi = std::fs::read_to_string(dir.path().join("hi.parallel_transliteration.txt")).unwrap();
    assert_eq!(hi.lines().count(), 22);
    for line in hi.lines() {
        let (_, latin) = line.split_once('\t').unwrap();
        // The danda has Common script and passes through.
        assert!(!latin.chars().any(|c| c.script() == Script::Devanagari), "{latin}");
    }
    assert!(dir.path().join("bn.parallel_transliteration.txt").is_file());
    assert!(dir.path().join("mr.parallel_transliteration.txt").is_file());
    assert!(!dir.path().join("ta.parallel_transliteration.txt").exists());
}
