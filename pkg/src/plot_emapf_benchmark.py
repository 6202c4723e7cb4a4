# Plot the mean search time of the path search benchmark against agent
# count, obstacle spacing and volume.
#
# Created by: Andy Carter, PE
# Created - 2024.04.19
# Last revised - 2024.04.19
#
# swarm-group-plan - benchmark plot


# ************************************************************
import argparse
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd

from config_utils import is_valid_file
# ************************************************************


# --------------------------------------------------------
def fn_plot_benchmark(df_summary, str_png_path, flt_threshold=0.1):

    """
    Three panels of mean search time (s): against agent count per spacing,
    against spacing per agent count and against volume per agent count.
    Each panel averages over the remaining sweep axis.
    """

    fig, list_ax = plt.subplots(1, 3, figsize=(15, 4.5))

    list_panels = [('int_agents', 'flt_spacing', 'agents', 'spacing %.1f m'),
                   ('flt_spacing', 'int_agents', 'obstacle spacing (m)', '%d agents'),
                   ('flt_volume', 'int_agents', 'volume (m$^3$)', '%d agents')]

    for ax, (str_x, str_series, str_label, str_fmt) in zip(list_ax, list_panels):
        df_mean = df_summary.groupby([str_series, str_x], as_index=False)['flt_mean_time'].mean()
        for value, df_series in df_mean.groupby(str_series):
            df_series = df_series.sort_values(str_x)
            ax.plot(df_series[str_x], df_series['flt_mean_time'], marker='o', label=str_fmt % value)
        ax.axhline(flt_threshold, color='red', linestyle='--', linewidth=1)
        ax.set_xlabel(str_label)
        ax.set_ylabel('mean search time (s)')
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(str_png_path, dpi=150)
    plt.close(fig)
    return str_png_path
# --------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
if __name__ == '__main__':

    parser = argparse.ArgumentParser(description='================ PLOT PATH SEARCH BENCHMARK ================')

    parser.add_argument('-i',
                        dest="str_summary_csv",
                        help=r'REQUIRED: benchmark summary csv Example: ../runs/bench/bench_mapf_summary.csv',
                        required=True,
                        metavar='FILE',
                        type=lambda x: is_valid_file(parser, x))

    parser.add_argument('-o',
                        dest="str_png_path",
                        help=r'OPTIONAL: output png: Default=next to the csv',
                        required=False,
                        default=None,
                        metavar='FILE',
                        type=str)

    args = vars(parser.parse_args())

    str_png = args['str_png_path']
    if str_png is None:
        str_png = os.path.join(os.path.dirname(args['str_summary_csv']), 'bench_mapf_timing.png')

    fn_plot_benchmark(pd.read_csv(args['str_summary_csv']), str_png)
    print("  COMPLETE: " + str_png)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
