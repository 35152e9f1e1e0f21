from .logger import logger


def format_each(desc, **kwargs):
    if isinstance(desc, dict):
        return {format_each(k, **kwargs): format_each(v, **kwargs) for k, v in desc.items()}
    if isinstance(desc, list):
        return [format_each(v, **kwargs) for v in desc]
    return desc.format(**kwargs)


common_descriptions = {
    'scenario': {
        '--config': 'A scenario file of key = value lines. `siridelay --help` lists the accepted keys',
        '--preset': 'Name of a shipped scenario ({presets}). Directories in SIRI_SCENARIO_DIR are searched first',
    },
    'verbose': {'--verbose': 'Log at DEBUG level for this run. SIRI_LOG_LEVEL sets the default level'},
}

config_keys = {
    'Lambda': 'Recruitment rate of susceptibles. Must be positive',
    'mu': 'Natural death rate. Must be positive; Lambda/mu is the disease-free population',
    'gamma': 'Recovery rate of infectives',
    'c': 'Disease-induced death rate',
    'beta': 'Transmission coefficient',
    'delta': 'Relapse rate from recovered back to infective',
    'kernel_family': ['Incubation-period distribution on [0, h]', {
        'truncated-exponential': 'exp(-tau) normalized on [0, h]',
        'uniform': 'constant density 1/h',
        'point-mass': 'no delay; requires kernel_h = 0',
    }],
    'kernel_h': 'Maximum incubation delay h. The integration step must divide it',
    'incidence_family': ['Incidence function f(s, i)', {
        'bilinear': 's*i',
        'saturated': 's*i/(1 + alpha*i) with alpha = incidence_saturation',
    }],
    'incidence_saturation': 'alpha of the saturated family (default 0)',
    'history': ['Initial history on [-h, 0]', {
        'fig1': '(sin(0.5 theta) + 150, sin(10 theta) + 20, 0)',
        'fig2': '(cos(5 theta) + 200, 10 sin(theta) + 30, 70)',
        'sinusoidal': 'read history_s, history_i and history_r',
    }],
    'history_s': 'kind,amplitude,frequency,offset giving amplitude*kind(frequency*theta) + offset; kind is sin or cos',
    'history_i': 'Same form as history_s',
    'history_r': 'Same form as history_s',
    't_end': 'Integration horizon (default 200)',
    'step': 'Integration step, also the kernel node spacing (default 0.01)',
    'output': 'Directory for CSV and summary files (default out)',
    'check_certificates': 'Evaluate the Lyapunov functional of the stable equilibrium (default true)',
    'check_invariants': 'Check positivity and the population bound (default true)',
}

descriptions = {
    'analyze': ['Analyze', 'Compute R0, the next-generation matrices and the equilibria of a scenario', {
        'Options': common_descriptions['scenario'],
        'Output': 'R0, E0, E* when R0 > 1, and which equilibrium is globally stable',
    }],
    'run': ['Run', 'Integrate a scenario and check it against the stability theorems', {
        'Options': {
            **common_descriptions['scenario'],
            '--out': 'Output directory, overriding `output`',
            '--step': 'Integration step, overriding `step`',
            '--t-end': 'Integration horizon, overriding `t_end`',
            '--no-certificates': 'Skip the Lyapunov functionals',
            '--history': 'Run from another preset history ({histories}) instead of the configured one',
        },
        'Outputs': {
            '<name>_trajectory.csv': 'Columns t,s,i,r,N,w,V,V1,V2,V3; certificate cells are empty when not evaluated',
            '<name>_summary.txt': 'key = value run summary',
        },
        'Exit codes': {
            '0': 'success',
            '2': 'configuration error',
            '3': 'positivity or population bound violated',
            '4': 'Lyapunov functional increased beyond tolerance',
        },
    }],
    'sweep': ['Sweep', 'Tabulate R0 and the endemic equilibrium over values of one parameter', {
        'Options': {
            **common_descriptions['scenario'],
            '--param': 'One of {sweepable}',
            '--values': 'Comma separated values, or start:stop:count',
            '--out': 'Output directory for sweep_<param>.csv',
        },
        'Output': 'Rows value,R0,endemic,i_star followed by the rows between which R0 crosses 1',
    }],
    'verify-incidence': ['Verify incidence', 'Check (H1)-(H3) for the configured incidence function on a grid', {
        'Options': {
            **common_descriptions['scenario'],
            '--s-grid': 'Susceptible grid, start:stop:count or a comma list, non-negative',
            '--i-grid': 'Infective grid, start:stop:count or a comma list, positive',
        },
        'Exit codes': {'0': 'every clause holds on the grid', '1': 'a clause fails'},
    }],
}


def as_text(entry, depth=0):
    indent = '  ' * depth
    if isinstance(entry, dict):
        text = ''
        for k in entry:
            value = entry[k]
            if isinstance(value, dict):
                text += f'\n{indent}{k}:{as_text(value, depth=depth + 1)}'
            elif isinstance(value, list):
                text += f'\n{indent}{k}: {as_text(value, depth=depth + 1)}'
            else:
                text += f'\n{indent}{k}: {value}'
        return text
    if isinstance(entry, list):
        text = entry[0]
        for i in entry[1:]:
            text += as_text(i, depth=depth) if isinstance(i, dict) else f'\n{indent}{i}'
        return text
    return str(entry)


def describe_config_keys():
    return 'Scenario keys:' + as_text(config_keys, depth=1)


def format_descriptions(subparsers, **kwargs):
    """Attach descriptions and epilogs to the subcommand parsers."""
    for name, entry in descriptions.items():
        if name not in subparsers:
            continue
        title, short, details = format_each(entry, **kwargs)
        subparsers[name].description = f'{title}: {short}'
        subparsers[name].epilog = as_text(details).lstrip('\n')
    undocumented = [name for name in subparsers if name not in descriptions]
    if len(undocumented) > 0:
        logger.warning('Some subcommands have not been documented %s', undocumented)
