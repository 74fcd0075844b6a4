//! The acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fld_cli::{cmd_stats, PipelineConfig, Strictness};
use fld_core::codec::record::TaskRecord;
use fld_core::codec::{lex, parse_response, serialize_response, Token, TokenStream};
use fld_core::engine::{filter_record, merge_annotations, AnnotatedImage, FilterConfig};
use fld_core::geometry::{dequantize_coord, iou, nms_indices, quantize_coord};
use fld_core::linguistics::{token_complexity, ParsedSentence, ParsedToken, Upos};
use fld_core::scoring::{sequence_nll, StepDistribution};
use fld_core::synth::{random_image, random_image_with_size, random_response};
use fld_core::{BBox, Task};
use rand::{rngs::StdRng, seq::SliceRandom, Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture readable")
}

/// Runs the `fld` binary; returns stdout, stderr and the exit code.
fn fld(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_fld")).args(args).output().expect("fld runs");
    (
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
        out.status.code().unwrap_or(-1),
    )
}

fn bbox(c: [f64; 4]) -> BBox {
    BBox::new(c[0], c[1], c[2], c[3]).expect("ordered corners")
}

fn ms(d: Duration) -> String {
    format!("{} ms", d.as_millis())
}

fn quantization() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let start = Instant::now();
    for _ in 0..10_000 {
        let extent = rng.gen_range(1.0..10_000.0);
        let v = if rng.gen_ratio(1, 20) { extent } else { rng.gen_range(0.0..=extent) };
        let b = quantize_coord(v, extent).map_err(|e| e.to_string())?;
        let d = dequantize_coord(b, extent).map_err(|e| e.to_string())?;
        ensure!(quantize_coord(d, extent) == Ok(b), "bin {b} of extent {extent} not recovered from {d}");
        ensure!((d - v).abs() <= extent / 1000.0, "error {} above {} at v={v}", (d - v).abs(), extent / 1000.0);
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {}", ms(took));
    Ok(format!("10000 pairs in {}", ms(took)))
}

fn mutate_arity(ts: &TokenStream, rng: &mut StdRng) -> TokenStream {
    let mut items = ts.items().to_vec();
    let locs: Vec<usize> =
        items.iter().enumerate().filter(|(_, t)| matches!(t, Token::Loc(_))).map(|(i, _)| i).collect();
    if !locs.is_empty() && rng.gen_bool(0.5) {
        items.remove(*locs.choose(rng).expect("non-empty"));
    } else {
        let at = rng.gen_range(0..=items.len());
        items.insert(at, Token::Loc(rng.gen_range(0..1000)));
    }
    TokenStream::from_tokens(items).expect("valid bins")
}

fn codec_law() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut mutations = 0;
    for task in Task::ALL {
        for _ in 0..1000 {
            let r = random_response(&mut rng, task);
            let ts = serialize_response(task, &r).map_err(|e| format!("{task}: {e}"))?;
            let back = lex(&ts.to_string()).and_then(|t| parse_response(&t, task));
            ensure!(back.as_ref() == Ok(&r), "{task}: {ts} parsed to {back:?}");
            let bad = mutate_arity(&ts, &mut rng);
            ensure!(parse_response(&bad, task).is_err(), "{task}: mutated {bad} parsed");
            mutations += 1;
        }
    }
    Ok(format!("12 tasks x 1000 responses, {mutations} arity mutations rejected"))
}

/// Reference IoU from the corner formula.
fn ref_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Brute-force NMS from the definition: an item survives iff no surviving
/// same-class item that outranks it overlaps it at or above `thr`.
fn nms_oracle(boxes: &[[f64; 4]], scores: &[f64], classes: &[u8], thr: f64) -> Vec<usize> {
    let n = boxes.len();
    let outranks = |j: usize, i: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
    fn kept(i: usize, memo: &mut [Option<bool>], check: &dyn Fn(usize, usize) -> bool) -> bool {
        if let Some(k) = memo[i] {
            return k;
        }
        let survive = !(0..memo.len()).any(|j| j != i && check(j, i) && kept(j, memo, check));
        memo[i] = Some(survive);
        survive
    }
    let suppresses = |j: usize, i: usize| {
        outranks(j, i) && classes[j] == classes[i] && ref_iou(boxes[i], boxes[j]) >= thr
    };
    let mut memo = vec![None; n];
    let mut ranked: Vec<(usize, usize)> = (0..n)
        .filter(|&i| kept(i, &mut memo, &suppresses))
        .map(|i| ((0..n).filter(|&j| outranks(j, i)).count(), i))
        .collect();
    ranked.sort_unstable();
    ranked.into_iter().map(|(_, i)| i).collect()
}

fn nms_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut kept_total = 0;
    for case in 0..500 {
        let n = rng.gen_range(0..=50);
        let boxes: Vec<[f64; 4]> = (0..n)
            .map(|_| {
                let (x, y) = (rng.gen_range(0.0..90.0), rng.gen_range(0.0..90.0));
                [x, y, x + rng.gen_range(0.0..30.0), y + rng.gen_range(0.0..30.0)]
            })
            .collect();
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=20u32)) / 20.0).collect();
        let classes: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let thr = rng.gen_range(0.0..=1.0);
        let got = nms_indices(n, thr, |i| bbox(boxes[i]), |i| scores[i], |i| Some(classes[i]));
        let want = nms_oracle(&boxes, &scores, &classes, thr);
        ensure!(got == want, "case {case}: nms {got:?} vs oracle {want:?}");
        kept_total += got.len();
    }
    Ok(format!("500 sets identical, {kept_total} boxes kept"))
}

fn iou_exactness() -> Outcome {
    let v = iou(&bbox([0.0, 0.0, 2.0, 2.0]), &bbox([1.0, 1.0, 3.0, 3.0]));
    ensure!((v - 1.0 / 7.0).abs() <= 1e-12, "iou = {v}");
    let mut rng = StdRng::seed_from_u64(4);
    let mut corner = || {
        let (x, y) = (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        [x, y, x + rng.gen_range(1e-3..40.0), y + rng.gen_range(1e-3..40.0)]
    };
    for _ in 0..10_000 {
        let (a, b) = (bbox(corner()), bbox(corner()));
        ensure!(iou(&a, &b) == iou(&b, &a), "asymmetric on {a:?} {b:?}");
        ensure!(iou(&a, &a) == 1.0, "self iou {} on {a:?}", iou(&a, &a));
    }
    Ok(format!("iou = {v:.15}, 10000 pairs symmetric with self-IoU 1"))
}

fn random_tree(rng: &mut StdRng, n: usize) -> ParsedSentence {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| ParsedToken {
            index: i,
            surface: format!("t{i}"),
            upos: Upos::Noun,
            head: heads[i],
            deprel: if heads[i] == 0 { "root".into() } else { "dep".into() },
        })
        .collect();
    ParsedSentence::new(None, tokens).expect("a tree")
}

fn complexity_handshake() -> Outcome {
    let chain = ParsedSentence::new(
        None,
        [(1, "big", 2), (2, "red", 3), (3, "barn", 0)]
            .into_iter()
            .map(|(index, surface, head)| ParsedToken {
                index,
                surface: surface.into(),
                upos: Upos::Noun,
                head,
                deprel: if head == 0 { "root".into() } else { "dep".into() },
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let degrees: Vec<usize> = (1..=3).map(|i| token_complexity(&chain, i).expect("in range")).collect();
    ensure!(degrees == [1, 2, 1], "chain degrees {degrees:?}");
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let s = random_tree(&mut rng, n);
        let total: usize = (1..=n).map(|i| token_complexity(&s, i).expect("in range")).sum();
        let edges = s.tokens().iter().filter(|t| t.head != 0).count();
        ensure!(total == 2 * edges, "degree sum {total} vs {edges} edges");
    }
    Ok("chain (1,2,1); 1000 trees satisfy the handshake".into())
}

fn nll_closed_forms() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..200 {
        let vocab = rng.gen_range(1..5000);
        let len = rng.gen_range(0..60);
        let steps = vec![StepDistribution::uniform(vocab); len];
        let target: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
        let nll = sequence_nll(&steps, &target).map_err(|e| e.to_string())?;
        let want = len as f64 * (vocab as f64).ln();
        ensure!((nll - want).abs() <= 1e-9, "uniform nll {nll} vs {want}");

        let sure: Vec<StepDistribution> = target
            .iter()
            .map(|&t| {
                let mut p = vec![0.0; vocab];
                p[t] = 1.0;
                StepDistribution::new(p).expect("one-hot")
            })
            .collect();
        let zero = sequence_nll(&sure, &target).map_err(|e| e.to_string())?;
        ensure!(zero == 0.0 && zero.is_sign_positive(), "certain nll {zero}");
    }
    for _ in 0..500 {
        let vocab = rng.gen_range(2..50);
        let len = rng.gen_range(0..40);
        let steps: Vec<StepDistribution> = (0..len)
            .map(|_| {
                let w: Vec<f64> = (0..vocab).map(|_| rng.gen_range(0.01..1.0)).collect();
                let s: f64 = w.iter().sum();
                StepDistribution::new(w.iter().map(|x| x / s).collect()).expect("normalized")
            })
            .collect();
        let target: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
        let k = rng.gen_range(0..=len);
        let whole = sequence_nll(&steps, &target).map_err(|e| e.to_string())?;
        let parts = sequence_nll(&steps[..k], &target[..k]).map_err(|e| e.to_string())?
            + sequence_nll(&steps[k..], &target[k..]).map_err(|e| e.to_string())?;
        ensure!((whole - parts).abs() <= 1e-9 * whole.max(1.0), "split at {k}: {whole} vs {parts}");
    }
    Ok("uniform = |y| ln V, certain = 0, additive over 500 splits".into())
}

fn survivors(rec: &AnnotatedImage) -> (Vec<String>, Vec<String>) {
    let pairs = rec.region_texts.iter().map(|p| serde_json::to_string(p).expect("serializes")).collect();
    let boxes = rec
        .triplets
        .iter()
        .flat_map(|t| t.regions.iter().map(move |g| format!("{}|{}", t.phrase.text, serde_json::to_string(g).expect("serializes"))))
        .collect();
    (pairs, boxes)
}

fn subset(a: &[String], b: &[String]) -> bool {
    let mut pool = b.to_vec();
    a.iter().all(|x| match pool.iter().position(|y| y == x) {
        Some(i) => {
            pool.swap_remove(i);
            true
        }
        None => false,
    })
}

fn filter_laws() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..500 {
        let rec = random_image(&mut rng, &format!("r{i}"));
        let cfg = FilterConfig {
            box_confidence_threshold: rng.gen_range(0.0..0.6),
            nms_iou_threshold: rng.gen_range(0.2..1.0),
            ..FilterConfig::default()
        };
        let (once, _) = filter_record(&rec, &cfg).map_err(|e| e.to_string())?;
        once.validate().map_err(|e| e.to_string())?;
        let (twice, report) = filter_record(&once, &cfg).map_err(|e| e.to_string())?;
        ensure!(twice == once && report.total() == 0, "record {i} not idempotent");
        let higher = FilterConfig { box_confidence_threshold: cfg.box_confidence_threshold + rng.gen_range(0.0..0.4), ..cfg.clone() };
        let (raised, _) = filter_record(&rec, &higher).map_err(|e| e.to_string())?;
        let (lo, hi) = (survivors(&once), survivors(&raised));
        ensure!(subset(&hi.0, &lo.0) && subset(&hi.1, &lo.1), "record {i}: raising the threshold added survivors");
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = dir.path().join("summary.json");
    let (out, err, code) = fld(&[
        "filter",
        "-i",
        fixture("corpus.jsonl").to_str().unwrap(),
        "--config",
        fixture("blacklist.toml").to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    ensure!(code == 0, "fld filter exited {code}: {err}");
    ensure!(out == read("corpus.filtered.jsonl"), "survivors differ:\n{out}");
    let got: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let want: serde_json::Value = serde_json::from_str(&read("corpus.filter.summary.json")).map_err(|e| e.to_string())?;
    ensure!(got == want, "summary {got} vs golden {want}");
    Ok("500 records idempotent and monotone; fixture summary matches the hand tally".into())
}

fn merge_laws() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..500 {
        let orig = random_image(&mut rng, &format!("m{i}"));
        let refined = random_image_with_size(&mut rng, &orig.id, orig.size);
        let cfg = FilterConfig {
            nms_iou_threshold: rng.gen_range(0.2..1.0),
            box_confidence_threshold: rng.gen_range(0.0..0.4),
            text_filters: rng.gen_bool(0.5),
            ..FilterConfig::default()
        };
        let empty = AnnotatedImage::new(orig.id.clone(), orig.size);
        let via_merge = filter_record(&merge_annotations(&orig, &empty, &cfg).map_err(|e| e.to_string())?, &cfg)
            .map_err(|e| e.to_string())?
            .0;
        let direct = filter_record(&orig, &cfg).map_err(|e| e.to_string())?.0;
        ensure!(via_merge == direct, "record {i}: merge with empty is not the filtered original");
        let once = merge_annotations(&orig, &refined, &cfg).map_err(|e| e.to_string())?;
        once.validate().map_err(|e| e.to_string())?;
        let twice = merge_annotations(&once, &refined, &cfg).map_err(|e| e.to_string())?;
        ensure!(twice == once, "record {i}: double merge differs");
    }
    let (out, err, code) = fld(&[
        "refine",
        "-i",
        fixture("tiebreak.original.jsonl").to_str().unwrap(),
        "--refined",
        fixture("tiebreak.refined.jsonl").to_str().unwrap(),
    ]);
    ensure!(code == 0, "fld refine exited {code}: {err}");
    ensure!(out == read("tiebreak.expected.jsonl"), "tie-break kept {out}");
    Ok("500 records; tie-break fixture keeps the original".into())
}

fn stats_determinism() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let recs: Vec<AnnotatedImage> = (0..10_000).map(|i| random_image(&mut rng, &format!("s{i}"))).collect();
    let mut input = String::new();
    for r in &recs {
        input.push_str(&r.to_json_line());
        input.push('\n');
    }
    let run = |jobs| {
        let start = Instant::now();
        let cfg = PipelineConfig::new(Strictness::Lenient).with_jobs(jobs);
        cmd_stats(&input, None, &cfg).map(|r| (r, start.elapsed())).map_err(|e| e.to_string())
    };
    let (one, t1) = run(1)?;
    let (eight, t8) = run(8)?;
    let json = one.document.to_json();
    ensure!(json == eight.document.to_json(), "stats differ between 1 and 8 jobs");
    ensure!(t1 < Duration::from_secs(30) && t8 < Duration::from_secs(30), "took {} and {}", ms(t1), ms(t8));

    let report = &one.document.report;
    ensure!(report.records == 10_000, "{} records counted", report.records);
    let pairs: usize = recs.iter().map(|r| r.region_texts.len()).sum();
    let boxes: usize = recs.iter().flat_map(|r| &r.triplets).map(|t| t.regions.len()).sum();
    for (s, n) in [(&report.spatial.region_text, pairs), (&report.spatial.triplets, boxes)] {
        ensure!(s.boxes == n as u64, "{} boxes counted, {n} present", s.boxes);
        ensure!(s.area.total() == s.boxes, "area histogram lost observations");
        ensure!(s.aspect.total() + s.skipped_aspect == s.boxes, "aspect histogram lost observations");
        ensure!(s.center_heatmap.total() == s.boxes, "heatmap lost observations");
    }

    let (out, err, code) = fld(&["stats", "-i", fixture("corpus.jsonl").to_str().unwrap(), "-j", "3"]);
    ensure!(code == 0, "fld stats exited {code}: {err}");
    let got: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let want: serde_json::Value = serde_json::from_str(&read("corpus.stats.json")).map_err(|e| e.to_string())?;
    ensure!(got == want, "fixture stats differ from the golden file");
    Ok(format!("10000 records: jobs 1 in {}, jobs 8 in {}; golden stats match", ms(t1), ms(t8)))
}

fn end_to_end() -> Outcome {
    let (encoded, err, code) = fld(&["encode", "-i", fixture("tasks.jsonl").to_str().unwrap()]);
    ensure!(code == 0, "fld encode exited {code}: {err}");
    ensure!(encoded == read("tasks.encoded.jsonl"), "encoded lines differ:\n{encoded}");
    for p in ["Locate the phrases in the caption:", "What is the text in the image, with regions?"] {
        ensure!(encoded.contains(p), "missing prompt {p:?}");
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let enc_path = dir.path().join("enc.jsonl");
    std::fs::write(&enc_path, &encoded).map_err(|e| e.to_string())?;
    let (decoded, err, code) = fld(&["decode", "-i", enc_path.to_str().unwrap()]);
    ensure!(code == 0, "fld decode exited {code}: {err}");
    let original = read("tasks.jsonl");
    let mut tasks = 0;
    for (a, b) in original.lines().zip(decoded.lines()) {
        let a: TaskRecord = serde_json::from_str(a).map_err(|e| e.to_string())?;
        let b: TaskRecord = serde_json::from_str(b).map_err(|e| e.to_string())?;
        ensure!(a == b, "record {} changed:\n{a:?}\n{b:?}", a.id);
        tasks += 1;
    }
    ensure!(tasks == Task::ALL.len() && decoded.lines().count() == tasks, "{tasks} records round-tripped");
    ensure!(decoded == original, "decoded bytes differ");
    Ok(format!("{tasks} task records reproduced bit-exactly"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("quantization round-trip", quantization),
        ("codec law", codec_law),
        ("NMS oracle equivalence", nms_equivalence),
        ("IoU exactness", iou_exactness),
        ("complexity handshake", complexity_handshake),
        ("sequence NLL closed forms", nll_closed_forms),
        ("filter laws", filter_laws),
        ("merge laws", merge_laws),
        ("stats determinism", stats_determinism),
        ("end-to-end codec", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
