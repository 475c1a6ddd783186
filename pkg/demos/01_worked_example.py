"""A nine-area map, two labelings, and what the penalties say about each.

The map is a 3x3 block of areas split into three regions.  In the first
labeling every region is connected; in the second, area 7 has been handed
to a region it does not touch.  Both are scored by the discrete model
(one variable per area, one per directed edge) and by its binary
expansion.  Connected plans pay nothing beyond their heterogeneity, while
the split plan pays at least one conservation penalty.
"""

from spatialqubo import build_dqm, build_qubo, check_contiguity, complete_flows, encode, evaluate_dqm, heterogeneity
from spatialqubo.dqm import dqm_configuration
from spatialqubo.fixtures import figure2_connected, figure2_disconnected, figure2_instance, figure2_seeds

inst = figure2_instance()
seeds = figure2_seeds()
dqm = build_dqm(inst, seeds)
qubo = build_qubo(inst, seeds)
print(f"{inst.n} areas, {inst.p} regions")
print(f"discrete model: {dqm.num_variables} variables; binary model: {qubo.num_vars} bits")
print("penalty weights:", dqm.penalty_config)

for name, labels in (("connected", figure2_connected()), ("split", figure2_disconnected())):
    h = heterogeneity(inst, labels)
    report = check_contiguity(inst, labels)
    flows = complete_flows(inst, labels, seeds)
    if flows is None:
        # keep whatever flows the connected plan used; they no longer balance
        flows = complete_flows(inst, figure2_connected(), seeds)
    e_dqm = evaluate_dqm(dqm, dqm_configuration(dqm, inst, labels, flows))
    e_qubo = qubo.energy(encode(qubo, labels, flows))
    print(f"\n{name} plan, regions by area id:")
    for k in range(1, inst.p + 1):
        print(f"  region {k}: {[inst.names[i] for i in labels.region(k)]}")
    print(f"  contiguous: {report.ok}   heterogeneity: {h:g}")
    print(f"  penalty paid: discrete {e_dqm - h:g}, binary {e_qubo - h:g}")
