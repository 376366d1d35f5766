use forceforge::eval::{distance_traveled, track_centroid, SampleSource, TrackOptions};
use forceforge::pipeline::realize;
use forceforge::render::palette::ball_color;
use forceforge::scene::{dataset_plan, AblationConfig, Scenario, SceneSpec};
use forceforge::VideoDims;

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[test]
fn segmentation_follows_projected_state_on_random_clips() {
    let dims = VideoDims::default().scaled(0.5).unwrap();
    let plan = dataset_plan(Scenario::Ball, 20, 2024, &AblationConfig::default(), &dims).unwrap();
    let mut segmented = 0;
    let mut total = 0;
    for entry in &plan {
        let SceneSpec::Ball(spec) = &entry.spec else { unreachable!() };
        let r = realize(entry).unwrap();
        let truth: Vec<(f64, f64)> =
            r.states.iter().map(|s| r.camera.project_point(s.balls[spec.target].position).unwrap()).collect();
        let color = ball_color(spec.balls[spec.target].color_id);
        let traj = track_centroid(&r.frames, color, Some(&truth), &TrackOptions::default()).unwrap();
        assert_eq!(traj.len(), r.frames.len());
        for s in &traj {
            let err = dist(s.center, truth[s.frame as usize]);
            assert!(err < 2.0, "record {} frame {}: {err:.3} px", entry.record_index, s.frame);
            total += 1;
            segmented += usize::from(s.source == SampleSource::Segmentation);
        }
        let gt = dist(truth[0], truth[truth.len() - 1]);
        let d = distance_traveled(&traj).unwrap();
        assert!((d - gt).abs() < 2.0, "record {}: {d:.2} vs {gt:.2}", entry.record_index);
    }
    // The check is only meaningful if most samples came from pixels.
    assert!(segmented * 10 >= total * 8, "{segmented}/{total} segmented");
}

#[test]
fn resting_distractors_do_not_drift() {
    let dims = VideoDims::default().scaled(0.5).unwrap();
    let plan = dataset_plan(Scenario::Ball, 6, 99, &AblationConfig::default(), &dims).unwrap();
    let mut checked = 0;
    for entry in &plan {
        let SceneSpec::Ball(spec) = &entry.spec else { unreachable!() };
        let r = realize(entry).unwrap();
        for (i, ball) in spec.balls.iter().enumerate() {
            let moved = r.states.iter().any(|s| s.balls[i].position != ball.position);
            if i == spec.target || moved {
                continue;
            }
            let hints = vec![r.camera.project_point(ball.position).unwrap(); r.frames.len()];
            let Ok(traj) = track_centroid(&r.frames, ball_color(ball.color_id), Some(&hints), &TrackOptions::default()) else {
                continue;
            };
            let seg: Vec<_> = traj.iter().filter(|s| s.source == SampleSource::Segmentation).collect();
            if seg.len() < r.frames.len() {
                // Occluded at some point by the moving ball.
                continue;
            }
            let drift = seg.iter().map(|s| dist(s.center, seg[0].center)).fold(0.0, f64::max);
            assert!(drift < 0.5, "record {} ball {i}: drift {drift}", entry.record_index);
            checked += 1;
        }
    }
    assert!(checked > 0);
}
