"""Split a list of sequence ids into train/test and write one manifest per sequence.

The id file holds one sequence id per line. Paths in the manifests follow the
layout <kind>/<sequence_id>[suffix] relative to the dataset root."""

import argparse
import logging

from sklearn.model_selection import train_test_split

from egovox.dataset.manifest import STANDARD_SEQUENCE_LENGTH, SequenceManifest, Split, dataset_stats, write_manifests


logger = logging.getLogger(__name__)

# 301 of 1,267 sequences are held out for testing
TEST_SIZE = 301 / 1267


def manifests_for(ids, test_size=TEST_SIZE, seed=0, frame_count=STANDARD_SEQUENCE_LENGTH, fps=30):
    if isinstance(test_size, float):
        # a float share is rounded up by sklearn
        test_size = int(round(test_size * len(ids)))
    train, test = train_test_split(sorted(ids), test_size=test_size, random_state=seed, shuffle=True)
    split_of = {i: Split.train for i in train}
    split_of.update({i: Split.test for i in test})
    return [
        SequenceManifest(
            sequence_id=i,
            split=split_of[i],
            frame_count=frame_count,
            fps=fps,
            paths={
                'events': f'events/{i}.evt',
                'masks': f'masks/{i}',
                'poses': f'poses/{i}.json',
                'meshes': f'meshes/{i}',
                'voxels': f'voxels/{i}.vox',
            },
        )
        for i in sorted(ids)
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("ids", help="text file with one sequence id per line")
    parser.add_argument("out_dir", help="directory for the manifests")
    parser.add_argument("--test_size", type=float, default=TEST_SIZE, help="share of sequences held out")
    parser.add_argument("--seed", type=int, default=0, help="random seed for the split")
    parser.add_argument("--frame_count", type=int, default=STANDARD_SEQUENCE_LENGTH, help="frames per sequence")
    parser.add_argument("--fps", type=float, default=30, help="frame rate")
    args = parser.parse_args()

    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s -   %(message)s",
        datefmt="%m/%d/%Y %H:%M:%S",
        level=logging.INFO,
    )

    with open(args.ids, "r") as f:
        ids = [line.strip() for line in f if line.strip()]
    manifests = manifests_for(ids, args.test_size, args.seed, args.frame_count, args.fps)
    write_manifests(args.out_dir, manifests)
    logger.info("%s", dataset_stats(manifests))


if __name__ == "__main__":
    main()
