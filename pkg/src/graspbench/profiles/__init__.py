"""
graspbench.profiles package

Built-in gripper profiles bundled with the package, one directory per gripper
holding profile.toml and gripper.json.
"""
