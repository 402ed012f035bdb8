"""Reported reference results for the melanoma benchmark configurations.

Each row: (config, serialization, accuracy, balanced_accuracy, precision,
sensitivity, f1, tn, tp, fn, fp) over the 8,977-case test set (1,695
malignant). The confusion counts are the source of truth; three printed
metric cells disagree with their own counts and are listed separately.
"""

REFERENCE_ROWS = [
    ("image_resnext50", None, 0.7380, 0.5054, 0.2022, 0.1316, 0.1594, 6402, 223, 1472, 880),
    ("image_efficientnet", None, 0.6954, 0.5061, 0.1985, 0.2018, 0.2001, 5901, 342, 1353, 1381),
    ("metadata_rf", None, 0.8156, 0.5209, 0.6667, 0.0472, 0.0882, 7242, 80, 1615, 40),
    ("metadata_vicuna", "html", 0.6547, 0.4873, 0.1725, 0.2183, 0.1927, 5507, 370, 1325, 1775),
    ("metadata_vicuna", "attribute_value", 0.737, 0.5263, 0.2294, 0.2413, 0.2352, 5908, 409, 1286, 1374),
    ("metadata_vicuna", "sentence", 0.6063, 0.5152, 0.2023, 0.3687, 0.2613, 4818, 625, 1070, 2464),
    ("early_fusion_rf_resnext50", "html", 0.8607, 0.6557, 0.8366, 0.3263, 0.4694, 7174, 553, 1142, 108),
    ("early_fusion_rf_resnext50", "attribute_value", 0.8623, 0.6568, 0.8536, 0.3268, 0.4277, 7187, 554, 1141, 95),
    ("early_fusion_rf_resnext50", "sentence", 0.8622, 0.6589, 0.8428, 0.3322, 0.4765, 7177, 563, 1132, 105),
    ("early_fusion_rf_efficientnet", "html", 0.8501, 0.6208, 0.8442, 0.2525, 0.3887, 7203, 428, 1267, 79),
    ("early_fusion_rf_efficientnet", "attribute_value", 0.8501, 0.6220, 0.8375, 0.2555, 0.3915, 7198, 433, 1262, 84),
    ("early_fusion_rf_efficientnet", "sentence", 0.8514, 0.6232, 0.8546, 0.2566, 0.3947, 7208, 435, 1260, 74),
    ("early_fusion_fnn_resnext50", "html", 0.6819, 0.5079, 0.2000, 0.2283, 0.2132, 5734, 387, 1308, 1548),
    ("early_fusion_fnn_resnext50", "attribute_value", 0.7040, 0.5089, 0.2038, 0.1953, 0.1995, 5989, 331, 1364, 1293),
    ("early_fusion_fnn_resnext50", "sentence", 0.7029, 0.5009, 0.1904, 0.1764, 0.1832, 6011, 299, 1396, 1271),
    ("early_fusion_fnn_efficientnet", "html", 0.7024, 0.4967, 0.1830, 0.1664, 0.1743, 6023, 282, 1413, 1259),
    ("early_fusion_fnn_efficientnet", "attribute_value", 0.7084, 0.5063, 0.2001, 0.1817, 0.1905, 6051, 308, 1387, 1231),
    ("early_fusion_fnn_efficientnet", "sentence", 0.7108, 0.5090, 0.2050, 0.1847, 0.1943, 6068, 313, 1382, 1214),
    ("zero_shot_llava", "html", 0.5845, 0.6113, 0.2608, 0.6543, 0.3729, 4138, 1109, 586, 3144),
    ("zero_shot_llava", "attribute_value", 0.7126, 0.6128, 0.3171, 0.4525, 0.3729, 5630, 767, 928, 1652),
    ("zero_shot_llava", "sentence", 0.5610, 0.5658, 0.2320, 0.5735, 0.3303, 4064, 972, 723, 3218),
    ("rag_resnext50", "html", 0.7396, 0.7202, 0.3921, 0.6891, 0.4998, 5471, 1168, 527, 1811),
    ("rag_resnext50", "attribute_value", 0.8876, 0.7970, 0.7254, 0.6513, 0.6864, 6864, 1104, 591, 418),
    ("rag_resnext50", "sentence", 0.8810, 0.7891, 0.7027, 0.6413, 0.6706, 6822, 1087, 608, 460),
    ("rag_efficientnet", "html", 0.7123, 0.6746, 0.3505, 0.6142, 0.4463, 5353, 1041, 654, 1929),
    ("rag_efficientnet", "attribute_value", 0.8491, 0.7345, 0.6114, 0.5504, 0.5793, 6689, 933, 762, 593),
    ("rag_efficientnet", "sentence", 0.8459, 0.7294, 0.6022, 0.4322, 0.5706, 6675, 919, 776, 607),
]

METRIC_NAMES = ("accuracy", "balanced_accuracy", "precision", "sensitivity", "f1")

# Printed cells that disagree with their own row's confusion counts.
INCONSISTENT_CELLS = {
    ("metadata_vicuna", "attribute_value", "accuracy"),          # 0.737 vs 0.7037
    ("early_fusion_rf_resnext50", "attribute_value", "f1"),      # 0.4277 vs 0.4727
    ("rag_efficientnet", "sentence", "sensitivity"),             # 0.4322 vs 0.5422
}

# The subset excluded by the reproduction acceptance criterion as stated.
ACCEPTANCE_EXCLUDED_CELLS = {
    ("early_fusion_rf_resnext50", "attribute_value", "f1"),
    ("rag_efficientnet", "sentence", "sensitivity"),
}

# Recovery fixtures: (name, baseline confusion counts (tn, tp, fn, fp),
# fp_corrected, fp_pct, fn_corrected, fn_pct). The second entry for the
# vicuna FP relation uses the html-row counts: the reported 70.87% figure
# corresponds to an FP budget of 1,775, not the 1,374 of the row it is
# printed beside.
RECOVERY_CASES = [
    ("rf_vs_rag", (7242, 80, 1615, 40), 34, 85.00, 1035, 64.09),
    ("vicuna_fp_vs_rag", (5507, 370, 1325, 1775), 1258, 70.87, 0, None),
    ("vicuna_fn_vs_rag", (5908, 409, 1286, 1374), 0, None, 827, 64.31),
    ("early_fusion_vs_rag", (7187, 554, 1141, 95), 71, 74.74, 604, 52.94),
    ("zero_shot_vs_rag", (5630, 767, 928, 1652), 1507, 91.22, 571, 61.53),
    ("html_vs_attribute_value", (5471, 1168, 527, 1811), 1513, 83.55, 116, 22.01),
    ("sentence_vs_attribute_value", (6822, 1087, 608, 460), 113, 24.57, 43, 7.07),
    ("efficientnet_vs_resnext", (6689, 933, 762, 593), 487, 82.12, 325, 42.65),
]
