use regionex_core::baselines::Strategy;
use regionex_core::framework::analyze_log;
use regionex_core::gridmap::{load_map, GroundTruth};
use regionex_core::simulator::{run, ScenarioConfig};
use regionex_core::Point;

/// Walled room of `w`×`h` cells at 0.1 m with optional interior walls.
fn room(w: usize, h: usize, walls: &[(usize, usize, usize, usize)]) -> String {
    let mut rows = vec![vec![b'.'; w]; h];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                rows[y][x] = b'#';
            }
        }
    }
    for &(x0, y0, x1, y1) in walls {
        for row in rows.iter_mut().take(y1).skip(y0) {
            for c in row.iter_mut().take(x1).skip(x0) {
                *c = b'#';
            }
        }
    }
    rows.into_iter().map(|r| String::from_utf8(r).unwrap() + "\n").collect()
}

fn truth(text: &str, starts: &[Point]) -> GroundTruth {
    let g = regionex_core::gridmap::parse_map(text, 0.1).unwrap();
    let cells: Vec<usize> = starts.iter().map(|&p| g.cell_at(p).unwrap()).collect();
    load_map(text, 0.1, &cells).unwrap()
}

fn config(strategy: Strategy, starts: Vec<Point>, seed: u64) -> ScenarioConfig {
    ScenarioConfig { map_name: "test".into(), starts, strategy, seed, max_time: 600.0, ..ScenarioConfig::default() }
}

#[test]
fn single_robot_small_room_completes() {
    let text = room(120, 120, &[]);
    let starts = vec![Point::new(1.0, 1.0)];
    let out = run(truth(&text, &starts), &config(Strategy::Hierarchical, starts, 1)).unwrap();
    assert!(out.metrics.completed);
    assert!(out.metrics.aet > 0.0);
    assert_eq!(out.metrics.aor, 1.0);
    assert!(out.metrics.curve.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn every_strategy_completes_a_divided_room() {
    let text = room(300, 200, &[(100, 0, 105, 150), (200, 50, 205, 200)]);
    let starts = vec![Point::new(1.0, 1.0), Point::new(1.5, 1.0)];
    for s in Strategy::ALL {
        let t = std::time::Instant::now();
        let out = run(truth(&text, &starts), &config(s, starts.clone(), 3)).unwrap();
        let summary = analyze_log(out.log.text());
        println!(
            "{s}: completed={} aet={:.1} adt={:.1} aor={:.3} plans={} idle={} wall={:?}",
            out.metrics.completed,
            out.metrics.aet,
            out.metrics.adt,
            out.metrics.aor,
            summary.plans,
            summary.idle_while_planning,
            t.elapsed()
        );
        assert!(out.metrics.completed, "{s} did not complete");
        assert_eq!(summary.errors, 0, "{s}");
        assert!(out.metrics.aor >= 1.0);
    }
}

#[test]
fn identical_runs_are_identical() {
    let text = room(200, 150, &[(80, 0, 85, 100)]);
    let starts = vec![Point::new(1.0, 1.0), Point::new(2.0, 1.0)];
    for s in [Strategy::Hierarchical, Strategy::Gre] {
        let a = run(truth(&text, &starts), &config(s, starts.clone(), 9)).unwrap();
        let b = run(truth(&text, &starts), &config(s, starts.clone(), 9)).unwrap();
        assert_eq!(a.log.text(), b.log.text());
        assert_eq!(a.metrics, b.metrics);
    }
}
