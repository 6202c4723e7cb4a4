# Command line entry point of the swarm group planner.
#
#   run        scenario json -> metrics, per agent traces, run summary
#   bench-mapf global config sweep -> path search timing csv and plot
#   gradcheck  penalty terms -> finite difference pass/fail report
#
# Exit code 0 when the run or check passes, 1 when it fails.
#
# Created by: Andy Carter, PE
# Created - 2024.05.15
# Last revised - 2024.06.03 - long flags for seed, output folder and config
#
# swarm-group-plan - command line


# ************************************************************
import argparse
import os
import time
import datetime

from benchmark_emapf import fn_benchmark_emapf
from config_utils import fn_typed_config_from_ini, is_valid_file
from gradient_check import fn_gradcheck
from penalty_terms import LIST_TERM_NAMES
from planner_errors import PlannerError
from plot_emapf_benchmark import fn_plot_benchmark
from simulate_team import fn_simulate_team
# ************************************************************


# --------------------------------------------------------
def fn_run_bench_mapf(str_config_ini, str_out_dir, int_seed, int_cores):

    print(" ")
    print("+=================================================================+")
    print("|              SWARM GROUP PLAN - PATH SEARCH BENCHMARK           |")
    print("+-----------------------------------------------------------------+")

    print("  ---(o) OUTPUT FOLDER: " + str(str_out_dir))
    print("  ---[c]   Optional: GLOBAL CONFIG: " + str(str_config_ini))
    print("  ---[s]   Optional: FIRST SEED: " + str(int_seed))
    print("===================================================================")

    try:
        dict_config = fn_typed_config_from_ini(str_config_ini)
        _, df_summary = fn_benchmark_emapf(dict_config, str_out_dir, int_seed, int_cores)
    except (FileNotFoundError, PlannerError) as e:
        print("  ERROR: " + str(e))
        return False

    os.makedirs(str_out_dir, exist_ok=True)
    fn_plot_benchmark(df_summary, os.path.join(str_out_dir, 'bench_mapf_timing.png'),
                      dict_config['bench_mapf']['flt_threshold'])

    int_over = int(df_summary['b_over_threshold'].sum())
    print("  Cells over threshold: " + str(int_over) + " of " + str(len(df_summary)))
    if int_over > 0:
        print(df_summary[df_summary['b_over_threshold']].to_string(index=False))
    return True
# --------------------------------------------------------


# --------------------------------------------------------
def fn_run_gradcheck(list_terms, int_instances, int_seed, str_out_dir):

    print(" ")
    print("+=================================================================+")
    print("|                 SWARM GROUP PLAN - GRADIENT CHECK               |")
    print("+-----------------------------------------------------------------+")

    print("  ---[t]   Optional: TERMS: " + ', '.join(list_terms))
    print("  ---[n]   Optional: INSTANCES PER TERM: " + str(int_instances))
    print("  ---[s]   Optional: SEED: " + str(int_seed))
    print("===================================================================")

    try:
        df_report = fn_gradcheck(list_terms, int_instances, int_seed)
    except PlannerError as e:
        print("  ERROR: " + str(e))
        return False

    df_terms = df_report.groupby('term').agg(flt_max_rel_err=('rel_err', 'max'),
                                             b_pass=('b_pass', 'all'))
    print(df_terms.to_string())

    if str_out_dir:
        os.makedirs(str_out_dir, exist_ok=True)
        df_report.to_csv(os.path.join(str_out_dir, 'gradcheck.csv'), index=False)

    return bool(df_report['b_pass'].all())
# --------------------------------------------------------


# --------------------------------------------------------
def fn_build_parser():

    parser = argparse.ArgumentParser(description='===================== SWARM GROUP PLAN =====================')
    subparsers = parser.add_subparsers(dest='str_command', required=True)

    parser_run = subparsers.add_parser('run', help='simulate a scenario')
    parser_run.add_argument('-i',
                            dest="str_scenario_json",
                            help=r'REQUIRED: path to the scenario json Example: ../example_config/scenario_circle_exchange.json',
                            required=True,
                            metavar='FILE',
                            type=lambda x: is_valid_file(parser_run, x))
    parser_run.add_argument('-n',
                            dest="int_seeds",
                            help='OPTIONAL: number of consecutive seeds: Default=1',
                            required=False,
                            default=1,
                            metavar='INTEGER',
                            type=int)
    parser_run.add_argument('-p',
                            dest="int_cores",
                            help='OPTIONAL: processes for multi seed runs: Default=1',
                            required=False,
                            default=1,
                            metavar='INTEGER',
                            type=int)

    parser_bench = subparsers.add_parser('bench-mapf', help='path search timing sweep')
    parser_bench.add_argument('-p',
                              dest="int_cores",
                              help='OPTIONAL: processes: Default=[bench_mapf] int_cores',
                              required=False,
                              default=None,
                              metavar='INTEGER',
                              type=int)

    parser_grad = subparsers.add_parser('gradcheck', help='finite difference gradient check')
    parser_grad.add_argument('-t',
                             dest="list_terms",
                             help='OPTIONAL: penalty terms to check: Default=all',
                             required=False,
                             default=list(LIST_TERM_NAMES),
                             nargs='+',
                             choices=LIST_TERM_NAMES,
                             metavar='TERM')
    parser_grad.add_argument('-n',
                             dest="int_instances",
                             help='OPTIONAL: random instances per term: Default=50',
                             required=False,
                             default=50,
                             metavar='INTEGER',
                             type=int)

    for sub in (parser_run, parser_bench, parser_grad):
        sub.add_argument('--seed',
                         dest="int_seed",
                         help='OPTIONAL: seed: Default=scenario seed for run, 0 otherwise',
                         required=False,
                         default=None,
                         metavar='INTEGER',
                         type=int)
        sub.add_argument('--out-dir',
                         dest="str_out_dir",
                         help=r'OPTIONAL: output folder: Default=./swarm_output',
                         required=False,
                         default='swarm_output',
                         metavar='DIR',
                         type=str)
        sub.add_argument('--config',
                         dest="str_config_ini",
                         help=r'OPTIONAL: global configuration ini: Default=built-in defaults',
                         required=False,
                         default=None,
                         metavar='FILE',
                         type=lambda x, s=sub: is_valid_file(s, x))

    return parser


def fn_main(list_argv=None):

    args = vars(fn_build_parser().parse_args(list_argv))

    str_command = args['str_command']
    if str_command == 'run':
        b_ok = fn_simulate_team(args['str_scenario_json'], args['str_out_dir'], args['str_config_ini'],
                                args['int_seed'], args['int_seeds'], args['int_cores'])
    elif str_command == 'bench-mapf':
        b_ok = fn_run_bench_mapf(args['str_config_ini'], args['str_out_dir'],
                                 args['int_seed'] or 0, args['int_cores'])
    else:
        b_ok = fn_run_gradcheck(args['list_terms'], args['int_instances'],
                                args['int_seed'] or 0, args['str_out_dir'])

    return 0 if b_ok else 1
# --------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
if __name__ == '__main__':

    flt_start_run = time.time()

    int_exit = fn_main()

    flt_end_run = time.time()
    flt_time_pass = (flt_end_run - flt_start_run) // 1
    time_pass = datetime.timedelta(seconds=flt_time_pass)

    print('Compute Time: ' + str(time_pass))
    raise SystemExit(int_exit)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
