use crate::fixture::{dir_contents, dir_entries, group_args, individual_args, write_fixture, FixtureOptions};
use crate::run;

fn argv(args: Vec<String>) -> Vec<String> {
    std::iter::once("fairlens".to_string()).chain(args).collect()
}

#[test]
fn individual_writes_two_files() {
    let fx = write_fixture(&FixtureOptions::default());
    let out = fx.out("ind");
    assert_eq!(run(argv(individual_args(&fx, &out))), 0);
    let names = dir_entries(&out);
    assert_eq!(names, ["individual.report.json", "individual.scatter.csv"]);
    let csv = std::fs::read_to_string(out.join("individual.scatter.csv")).unwrap();
    assert!(csv.starts_with("# alpha_empirical="));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 24);
}

#[test]
fn shuffle_replays() {
    let fx = write_fixture(&FixtureOptions::default());
    let mut runs = Vec::new();
    for name in ["s1", "s2"] {
        let out = fx.out(name);
        let mut args = individual_args(&fx, &out);
        args.extend(["--shuffle".to_string(), "42".to_string()]);
        assert_eq!(run(argv(args)), 0);
        runs.push(dir_contents(&out));
    }
    assert_eq!(runs[0], runs[1]);
    let report = String::from_utf8(runs[0][0].1.clone()).unwrap();
    assert!(report.contains("\"permutation\""));
}

#[test]
fn dangling_manifest_id_is_validation_error() {
    let fx = write_fixture(&FixtureOptions { dangling: true, ..Default::default() });
    let out = fx.out("dangling");
    assert_eq!(run(argv(individual_args(&fx, &out))), 2);
    assert!(dir_entries(&out).is_empty());
    assert_eq!(run(argv(group_args(&fx, &out))), 2);
    assert!(dir_entries(&out).is_empty());
}

#[test]
fn missing_prompt_embedding_is_validation_error() {
    let fx = write_fixture(&FixtureOptions { drop_prompt: Some(("ja", "female")), ..Default::default() });
    let out = fx.out("noprompt");
    assert_eq!(run(argv(group_args(&fx, &out))), 2);
    assert!(dir_entries(&out).is_empty());
}

#[test]
fn group_writes_report_and_tables() {
    let fx = write_fixture(&FixtureOptions::default());
    let out = fx.out("grp");
    assert_eq!(run(argv(group_args(&fx, &out))), 0);
    assert_eq!(
        dir_entries(&out),
        ["group.accuracy.csv", "group.disp.csv", "group.gap.csv", "group.prop1.csv", "group.report.json"]
    );
    let text = std::fs::read_to_string(out.join("group.report.json")).unwrap();
    let env = fairlens::report::parse_envelope(&text).unwrap();
    let fairlens::report::Payload::Group(report) = env.payload else { panic!("wrong payload") };
    assert_eq!(report.languages, ["en", "de", "ja"]);
    assert!(report.prop1_checks.iter().all(|c| c.holds));
    assert!(env.input_digests.values().all(|d| d.starts_with("sha256:")));
}

#[test]
fn unknown_pivot_is_validation_error() {
    let fx = write_fixture(&FixtureOptions::default());
    let out = fx.out("pivot");
    let mut args = group_args(&fx, &out);
    let i = args.iter().position(|a| a == "--pivot").unwrap();
    args[i + 1] = "fr".into();
    assert_eq!(run(argv(args)), 2);
    assert!(dir_entries(&out).is_empty());
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t").display().to_string();
    assert_eq!(run(["fairlens", "verify-theory", "--trials", "0", "--out", &out]), 64);
    assert_eq!(run(["fairlens", "verify-theory", "--dims", "9-3", "--out", &out]), 64);
    assert_eq!(run(["fairlens", "bogus"]), 64);
    assert_eq!(run(["fairlens", "audit-individual"]), 64);
    assert_eq!(run(["fairlens", "--version"]), 0);
    assert!(dir_entries(&dir.path().join("t")).is_empty());
}

#[test]
fn small_theory_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theory");
    let o = out.display().to_string();
    assert_eq!(run(["fairlens", "verify-theory", "--trials", "500", "--dims", "2-16", "--out", &o]), 0);
    assert_eq!(dir_entries(&out), ["theory.report.json"]);
}

#[test]
fn io_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.embjsonl").display().to_string();
    let out = dir.path().join("o").display().to_string();
    let code = run(["fairlens", "audit-individual", "--embeddings", &missing, "--manifest", &missing, "--out", &out]);
    assert_eq!(code, 2);
}
