//! Every example runs to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $name;

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(coverage_report, "../examples/coverage_report.rs");
example!(projection_table, "../examples/projection_table.rs");
example!(gap_prompts, "../examples/gap_prompts.rs");
example!(augment_with_mock, "../examples/augment_with_mock.rs");
example!(differential_vote, "../examples/differential_vote.rs");
example!(mock_experiment, "../examples/mock_experiment.rs");
example!(http_standin, "../examples/http_standin.rs");
example!(corpus_roundtrip, "../examples/corpus_roundtrip.rs");
