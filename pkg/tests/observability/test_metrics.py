"""Tests for the Prometheus registry and its textfile export."""

from jfts_am.observability import metrics


class TestMetrics:
    def test_render_lists_counters(self):
        text = metrics.render_metrics().decode()
        for name in (
            "jfts_plan_solves_total",
            "jfts_lambert_w_domain_errors_total",
            "jfts_formula_mismatch_total",
            "jfts_truncation_warnings_total",
            "jfts_mc_samples_total",
        ):
            assert name in text

    def test_write_metrics(self, tmp_path):
        metrics.mc_samples_total.inc(0)
        path = tmp_path / "jfts.prom"
        metrics.write_metrics(path)
        assert path.read_bytes().startswith(b"# HELP")

    def test_labelled_counter(self):
        labels = {"kind": "arate_cpow_iber", "outcome": "error"}
        before = metrics.registry.get_sample_value("jfts_plan_solves_total", labels) or 0.0
        metrics.plan_solves_total.labels(**labels).inc()
        assert metrics.registry.get_sample_value("jfts_plan_solves_total", labels) == before + 1
