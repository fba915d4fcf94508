"""Builds reference_layout_70.csv: 40 real records in 20 client groups plus 30
synthetic singleton groups, with the price column pinned to the
summary moments of the reference deal sheet (mean 16,309, population std 11,485, min 2,738, max 40,000).

Run from this directory: python3 make_reference_layout.py
"""
import math
import random

rng = random.Random(2024)

# Real clients 02..21: two long engagements (4 and 3 phases), four more
# 3-phase clients, nine 2-phase clients and six one-off deals.
real_sizes = [4, 3, 3, 3, 3] + [2] * 9 + [1] * 6
assert len(real_sizes) == 20 and sum(real_sizes) == 40

industries = ["agriculture", "automotive", "construction", "consulting", "ecommerce",
              "education", "energy", "finance", "fitness", "healthcare", "hospitality",
              "insurance", "legal", "logistics", "manufacturing", "marketing", "media",
              "nonprofit", "real_estate", "retail", "saas", "telecom"]
techs = ["no_code", "low_code", "custom"]


def clamp(v, lo, hi):
    return max(lo, min(hi, v))


def revenue():
    sigma2 = math.log1p((30768920 / 8105790) ** 2)
    mu = math.log(8105790) - sigma2 / 2
    return round(clamp(math.exp(rng.gauss(mu, math.sqrt(sigma2))), 100000, 250000000), -3)


def score(mean):
    return int(clamp(round(rng.gauss(mean, 0.9)), 2, 5))


def latent(rev, dur, pain, cx, tech):
    price = 8600 * 1.75 ** (cx - 3) * 1.45 ** (pain - 3) * (dur / 8) ** 0.3
    price *= 1.6 if rev >= 3e6 else 0.6
    return price * {"no_code": 0.8, "low_code": 0.9, "custom": 1.0}[tech]


rows = []
groups = [("client-%02d" % (g + 2), size, "real") for g, size in enumerate(real_sizes)]
groups += [("synth-%02d" % (g + 22), 1, "synthetic") for g in range(30)]
for name, size, prov in groups:
    rev = revenue()
    ind = rng.choice(industries)
    tech = rng.choices(techs, weights=[0.2, 0.3, 0.5])[0]
    for phase in range(1, size + 1):
        dur = int(clamp(round(rng.lognormvariate(2.0, 0.5)), 3, 20))
        pain, cx = score(3.6), score(3.9)
        ph = phase if size > 1 else int(clamp(round(rng.gauss(1.6, 0.7)), 1, 4))
        raw = latent(rev, dur, pain, cx, tech) * math.exp(rng.gauss(0, 0.15))
        rows.append([name, ind, rev, dur, pain, cx, ph, tech, raw, prov])

# Pin the extremes, then fit the remaining prices by an affine map of the raw
# ones. Records the map pushes out of range are pinned just inside the bounds
# and the rest refitted until everything lands in (min, max).
N, MEAN, STD, LO, HI = 70, 16309.0, 11485.0, 2738.0, 40000.0
order = sorted(range(N), key=lambda i: rows[i][8])
raw = {i: rows[i][8] for i in range(N)}
fixed = {order[0]: LO, order[-1]: HI}
while True:
    free = [i for i in order if i not in fixed]
    fsum = sum(fixed.values())
    mu = (N * MEAN - fsum) / len(free)
    ss = N * STD ** 2 - sum((v - MEAN) ** 2 for v in fixed.values()) - len(free) * (mu - MEAN) ** 2
    mx = sum(raw[i] for i in free) / len(free)
    sx = math.sqrt(sum((raw[i] - mx) ** 2 for i in free) / len(free))
    a = math.sqrt(ss / len(free)) / sx
    fitted = {i: a * (raw[i] - mx) + mu for i in free}
    low = [i for i in free if fitted[i] < LO + 40]
    high = [i for i in free if fitted[i] > HI - 40]
    if not low and not high:
        break
    for k, i in enumerate(sorted(low, key=lambda i: raw[i], reverse=True)):
        fixed[i] = LO + 40 + 35 * (sum(1 for v in fixed.values() if v < LO + 1000) + k)
    for k, i in enumerate(sorted(high, key=lambda i: raw[i])):
        fixed[i] = HI - 40 - 35 * (sum(1 for v in fixed.values() if v > HI - 1000) + k)
for i in range(N):
    rows[i][8] = round(fixed.get(i, fitted.get(i, 0)))
# Absorb the integer rounding residue in the median record.
residue = round(N * MEAN - sum(r[8] for r in rows))
rows[order[N // 2]][8] += residue

with open("reference_layout_70.csv", "w") as f:
    f.write("record_id,client_group,industry,client_revenue,est_duration_weeks,pain_severity_score,"
            "integration_complexity,phase,tech_stack,price,provenance\n")
    for k, r in enumerate(rows):
        f.write("rec-%03d,%s,%s,%d,%d,%d,%d,%d,%s,%d,%s\n" % (k + 1, r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9]))

prices = [r[8] for r in rows]
m = sum(prices) / N
print("mean", m, "std", math.sqrt(sum((p - m) ** 2 for p in prices) / N), "min", min(prices), "max", max(prices))
