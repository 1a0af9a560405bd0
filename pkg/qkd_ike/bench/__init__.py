from .stats import phase_stats, samples_frame, mode_stats
from .tables import overhead_table, render_tables, read_stats_csv, total_means, label_sort_key
from .harness import run_bench, run_mode, bench_dh_cost
