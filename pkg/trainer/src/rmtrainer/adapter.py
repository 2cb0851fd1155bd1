"""Predictor hook for the evaluation harness.

`load_predictor` returns a `(scene, tx_index, observations) -> RadioMap`
callable, the contract the harness expects from every predictor. This is
the one module that imports the dataset toolkit as a library: it has to
rasterize live scenes and answer in the harness's map type. Imports are
deferred so that training and inference on files alone never need it.
"""

from .predict import load_checkpoint, predict_db, prepare_input


def load_predictor(path, drop_env: bool = False):
    model, ckpt = load_checkpoint(path)

    def predict(scene, tx_index, obs):
        from roomwave.rasterize import EncodeConfig, encode_sample
        from roomwave.scene import RadioMap, empty_map_for_scene

        cfg = EncodeConfig.from_dict(ckpt["encode"])
        enc = encode_sample(scene, scene.transmitters[tx_index], obs, cfg)
        x = prepare_input(enc.stacked(),
                          enc.channel_names(cfg, scene.room_height),
                          ckpt, drop_env=drop_env,
                          obs=(obs.rows, obs.cols, obs.values_db))
        geometry = empty_map_for_scene(scene)
        values = predict_db(model, x, geometry.valid_mask)
        return RadioMap(values=values, valid_mask=geometry.valid_mask,
                        origin=geometry.origin, pixel_size=geometry.pixel_size,
                        rx_height=geometry.rx_height,
                        map_id=obs.source_map_id or scene.id)

    return predict
