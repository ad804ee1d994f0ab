mod common;

use common::{fixture, matrix_toml, write_replay_stores};
use t2t_core::miner::{build_triplets, MineOptions};
use t2t_core::orchestrator::{render_report, run_matrix, AblationGrid, Cell, MatrixConfig, Variant};
use t2t_core::prompt::PromptKind;

#[test]
fn a_missing_store_fails_only_its_cell_and_is_retried() {
    let tmp = tempfile::tempdir().unwrap();
    let triplets = build_triplets(&fixture("mini"), &MineOptions::default()).unwrap().triplets;
    let replay = tmp.path().join("replay");
    let out = tmp.path().join("runs");
    let broken = Variant::new(false, PromptKind::Improved);
    write_replay_stores(&replay, &triplets, Some(broken));
    let cfg = MatrixConfig::from_toml(&matrix_toml(&replay, &out)).unwrap();

    let first = run_matrix(&cfg).unwrap();
    assert_eq!(first.grid.failed_cells(), 1);
    match first.grid.get(broken, "mini").unwrap() {
        Cell::Failed { cause } => assert!(cause.contains("mini:shop."), "{cause}"),
        c => panic!("{c:?}"),
    }
    for v in Variant::ALL.into_iter().filter(|v| *v != broken) {
        assert!(first.grid.get(v, "mini").unwrap().metrics().is_some(), "{v}");
    }
    let report = render_report(&first.grid).unwrap();
    assert!(report.text.contains("| NoFT+I.P | —[1] |"), "{}", report.text);
    assert!(report.text.contains("[1] NoFT+I.P on mini failed"));

    // the grid on disk is what the report verb reads
    assert_eq!(AblationGrid::load(&out.join("grid.json")).unwrap(), first.grid);
    for name in ["prompts.jsonl", "generated.jsonl", "processed.jsonl", "records.jsonl", "metrics.json", "error_categories.csv"] {
        assert!(out.join("cells/ft-ip/mini").join(name).is_file(), "{name}");
    }

    write_replay_stores(&replay, &triplets, None);
    let second = run_matrix(&cfg).unwrap();
    assert_eq!((second.computed, second.reused), (1, 3));
    assert_eq!(second.grid.failed_cells(), 0);
}

#[test]
fn changing_the_config_invalidates_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let triplets = build_triplets(&fixture("mini"), &MineOptions::default()).unwrap().triplets;
    let replay = tmp.path().join("replay");
    let out = tmp.path().join("runs");
    write_replay_stores(&replay, &triplets, None);
    let toml = matrix_toml(&replay, &out);
    let cfg = MatrixConfig::from_toml(&toml).unwrap();
    run_matrix(&cfg).unwrap();

    let longer = MatrixConfig::from_toml(&toml.replace("test_timeout_secs = 20", "test_timeout_secs = 25")).unwrap();
    let rerun = run_matrix(&longer).unwrap();
    assert_eq!((rerun.computed, rerun.reused), (4, 0));

    let mut parallel = longer.clone();
    parallel.parallel_cells = 4;
    let again = run_matrix(&parallel).unwrap();
    assert_eq!(again.reused, 4, "parallel_cells is not part of a cell's inputs");
    assert_eq!(again.grid, rerun.grid);
}

#[test]
fn parallel_cells_give_the_same_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let triplets = build_triplets(&fixture("mini"), &MineOptions::default()).unwrap().triplets;
    let replay = tmp.path().join("replay");
    write_replay_stores(&replay, &triplets, None);
    let serial = MatrixConfig::from_toml(&matrix_toml(&replay, &tmp.path().join("a"))).unwrap();
    let mut parallel = MatrixConfig::from_toml(&matrix_toml(&replay, &tmp.path().join("b"))).unwrap();
    parallel.parallel_cells = 4;
    let (s, p) = (run_matrix(&serial).unwrap(), run_matrix(&parallel).unwrap());
    assert_eq!(s.grid, p.grid);
    assert_eq!(render_report(&s.grid).unwrap(), render_report(&p.grid).unwrap());
}
