mod common;

use common::{active_names, q, synthetic_frame};
use hdforecast::frame::Series;
use hdforecast::pipeline::*;
use hdforecast::Error;

fn config(frame: &hdforecast::frame::SeriesFrame) -> PipelineConfig {
    PipelineConfig {
        active: active_names(frame),
        ..Default::default()
    }
}

#[test]
fn dataset_alignment() {
    let f = synthetic_frame(1, 2);
    let z = vec!["DPUK4".to_string(), "DDPUK4".to_string()];
    let d = build_direct_dataset(&f, "DPUK4", 1, &z, &[], None, q("2019q4"), 8, None).unwrap();
    assert_eq!(d.quarters[0], q("1979q2"));
    assert_eq!(*d.quarters.last().unwrap(), q("2019q3"));
    let y = f.get("DPUK4").unwrap();
    assert_eq!(d.y[d.y.len() - 1], y.get(q("2019q4")).unwrap());
    assert_eq!(d.z[(0, 0)], y.get(q("1979q2")).unwrap());
    assert_eq!(d.z_origin[0], y.get(q("2019q4")).unwrap());

    let d4 = build_direct_dataset(&f, "DPUK4", 4, &z, &[], None, q("2019q1"), 8, None).unwrap();
    assert_eq!(*d4.quarters.last().unwrap(), q("2018q1"));
    assert_eq!(d4.y[d4.y.len() - 1], y.get(q("2019q1")).unwrap());

    let err = build_direct_dataset(&f, "DPUK4", 200, &z, &[], None, q("2019q1"), 8, None);
    assert!(matches!(err, Err(Error::InsufficientData(_))));
    let err = build_direct_dataset(&f, "DPUK4", 1, &z, &[], None, q("2030q1"), 8, None);
    assert!(matches!(err, Err(Error::Range(_))));
}

#[test]
fn schedule_and_realizations() {
    let f = synthetic_frame(2, 3);
    let cfg = config(&f);
    let out = run_recursive(&f, &cfg, &[MethodSpec::new(MethodTag::Ar2)]).unwrap();
    assert!(out.failures.is_empty());
    for (h, n) in [(1, 14), (2, 15), (4, 17)] {
        let recs: Vec<_> = out.records.iter().filter(|r| r.horizon == h).collect();
        assert_eq!(recs.len(), n);
        assert_eq!(recs.iter().filter(|r| r.realization.is_some()).count(), 13);
        assert!(recs.iter().all(|r| r.target_quarter == r.window_end.add(h as i64)));
    }
    let rep = evaluate(&out.records, &out.selections, &cfg.horizons, cfg.eval_start, cfg.eval_end);
    assert!(rep.rows[0].scores.iter().all(|s| s.n == 13 && s.missing == 0 && s.rmsfe.unwrap() >= 0.0));
}

#[test]
fn no_look_ahead() {
    let f = synthetic_frame(3, 2);
    let cfg = PipelineConfig {
        horizons: vec![1, 4],
        ..config(&f)
    };
    let methods = [MethodSpec::new(MethodTag::Ar2), MethodSpec::new(MethodTag::Ar2Ocmt)];
    let base = run_recursive(&f, &cfg, &methods).unwrap();
    let cut = q("2021q2");
    let mut corrupted = f.clone();
    for name in active_names(&f) {
        let s = f.get(&name).unwrap();
        let vals = s
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| if s.start().add(i as i64) > cut { v.map(|_| 1e6) } else { *v })
            .collect();
        corrupted.insert(name, Series::new(s.start(), vals).unwrap()).unwrap();
    }
    let again = run_recursive(&corrupted, &cfg, &methods).unwrap();
    let mut checked = 0;
    for (a, b) in base.records.iter().zip(&again.records) {
        if a.window_end <= cut {
            assert_eq!(a.forecast, b.forecast, "{} h={} {}", a.method, a.horizon, a.window_end);
            checked += 1;
        } else {
            assert_ne!(a.forecast, b.forecast);
        }
    }
    assert!(checked > 10);
}

#[test]
fn empty_selection_reduces_to_benchmark() {
    let f = synthetic_frame(4, 3);
    let cfg = config(&f);
    let mut strict = MethodSpec::new(MethodTag::ArxOcmt);
    strict.ocmt.p = 1e-300;
    let out = run_recursive(&f, &cfg, &[MethodSpec::new(MethodTag::Arx), strict]).unwrap();
    assert!(out.selections.iter().all(|s| s.selected.is_empty()));
    let n = out.records.len() / 2;
    for (a, b) in out.records[..n].iter().zip(&out.records[n..]) {
        assert_eq!(a.forecast, b.forecast);
    }
}

#[test]
fn all_methods_reproducible_bytes() {
    let f = synthetic_frame(5, 3);
    let cfg = PipelineConfig {
        horizons: vec![1, 2],
        ..config(&f)
    };
    let mut methods = MethodSpec::standard_set();
    for m in &mut methods {
        m.cv.grid_size = 20;
    }
    let prov = Provenance {
        config_hash: "0123".into(),
        seed: 7,
    };
    let render = || {
        let out = run_recursive(&f, &cfg, &methods).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        let rep = evaluate(&out.records, &out.selections, &cfg.horizons, cfg.eval_start, cfg.eval_end);
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        write_forecasts_csv(&out.records, &mut a, &prov).unwrap();
        write_selection_log(&out.selections, &out.failures, &mut b, &prov).unwrap();
        rep.write_csv(&mut c, &prov).unwrap();
        (a, b, c, rep, out)
    };
    let (a1, b1, c1, rep, out) = render();
    let (a2, b2, c2, _, _) = render();
    assert_eq!((&a1, &b1, &c1), (&a2, &b2, &c2));

    let eval = String::from_utf8(c1).unwrap();
    assert!(eval.starts_with("# config_hash=0123 seed=7\nmethod,rmsfe_h1,n_h1,missing_h1,rmsfe_h2"));
    assert_eq!(eval.lines().count(), 2 + 7);
    assert_eq!(rep.rows.len(), 7);

    // Plain Lasso always has DPUK4 available; frequencies never exceed the window count.
    for (method, table) in &rep.frequencies {
        for (var, per_h) in table {
            for (h, n) in per_h {
                assert!(*n <= window_ends(cfg.eval_start, cfg.eval_end, *h).len(), "{method} {var}");
            }
        }
    }
    let lasso_cells = out.selections.iter().filter(|s| s.method == "LASSO").count();
    assert_eq!(lasso_cells, 14 + 15);

    let parsed = read_forecasts_csv(a1.as_slice()).unwrap();
    assert_eq!(parsed.len(), out.records.len());
    assert_eq!(parsed[0].method, out.records[0].method);
    assert_eq!(parsed[0].window_end, out.records[0].window_end);
}

#[test]
fn failed_cells_are_null() {
    let f = synthetic_frame(6, 1);
    let cfg = PipelineConfig {
        horizons: vec![1],
        sample_start: Some(q("2019q1")),
        ..config(&f)
    };
    let out = run_recursive(&f, &cfg, &[MethodSpec::new(MethodTag::Ar2)]).unwrap();
    assert!(!out.failures.is_empty());
    let failed = out.records.iter().filter(|r| r.forecast.is_none()).count();
    assert_eq!(failed, out.failures.len());
    let rep = evaluate(&out.records, &out.selections, &cfg.horizons, cfg.eval_start, cfg.eval_end);
    let s = &rep.rows[0].scores[0];
    assert_eq!(s.n + s.missing, 13);
    assert!(s.missing > 0);
}

#[test]
fn benchmark_join() {
    let csv = "method,horizon,target_quarter,forecast\nBoE,1,2020Q1,1.5\nBoE,1,2020Q2,NA\n";
    let mut recs = read_forecasts_csv(csv.as_bytes()).unwrap();
    assert_eq!(recs[0].window_end, q("2019q4"));
    let f = synthetic_frame(7, 0);
    attach_realizations(&mut recs, &f, "DPUK4").unwrap();
    assert_eq!(recs[0].realization, f.get("DPUK4").unwrap().get(q("2020q1")));
    let rep = evaluate(&recs, &[], &[1], q("2020q1"), q("2023q1"));
    assert_eq!(rep.rows[0].scores[0].n, 1);
    assert_eq!(rep.rows[0].scores[0].missing, 1);
}
