"""
Measure-first versus fully-quantum learning
===========================================

Train both kinds of learner on one hidden x and compare the distributions
they produce against the true concept distribution.
"""

import numpy as np
from mfsep import (BoolFunc, Strategy, concept_distribution, fully_quantum_learn,
                   measure_first_learn, tv_distance)
from mfsep.concepts import FSource, LabelMode, generate_training_data
from mfsep.evaluation import exact_generator_distribution
from mfsep.mflearner import default_ell, measure, measure_training_data

rng = np.random.default_rng(7)
n = 4
x = 0b1011
ell = default_ell(n)

# one labelled example is enough when the label is x itself
data = generate_training_data(n, x, 1, ell, LabelMode.FULL_X, FSource.UNIFORM, rng)
fq = fully_quantum_learn(data)

# a fresh function the learners have never seen
f = BoolFunc.random(n, rng)
target = concept_distribution(f, x)
print("fully quantum TV:", tv_distance(fq.exact_distribution(f), target))

for strategy in [Strategy.shadow(ell), Strategy.fourier(ell)]:
    gen = measure_first_learn(strategy, measure_training_data(strategy, data, rng))
    # the generator only ever sees a measured record of f
    rep = measure(strategy, f, ell, rng)
    tv = tv_distance(exact_generator_distribution(gen, f, rng, rep=rep), target)
    print(strategy.strategy_id, "TV:", round(tv, 4))

# leaky gets the whole truth table, so it should be exact
leaky = Strategy.leaky(m_budget=2**n)
one_copy = generate_training_data(n, x, 1, 1, LabelMode.FULL_X, FSource.UNIFORM, rng)
gen = measure_first_learn(leaky, measure_training_data(leaky, one_copy, rng))
rep = measure(leaky, f, 1, rng)
print("leaky TV:", tv_distance(exact_generator_distribution(gen, f, rng, rep=rep), target))

# sweep a few sizes with the library harness
from mfsep.evaluation import SeparationConfig, separation_experiment

res = separation_experiment(SeparationConfig(n_values=(2, 4, 6), strategies=("shadow",),
                                             f_trials=20, seed=1))
print(res.summary_csv())
